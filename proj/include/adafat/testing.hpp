#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adafat/factors.hpp"
#include "adafat/model.hpp"
#include "adafat/regression.hpp"

namespace adafat {

enum class Method { ORI, ORA, FATDW, ADAFAT, FATLD, BH };

std::string_view to_string(Method method);
/// Case-insensitive; accepts "ori", "ora", "fatdw", "adafat", "fatld", "bh".
std::optional<Method> parse_method(std::string_view name);

struct TestingConfig {
  double tau = 0.1;
  double nu = 0.5;
  /// Use min(pi0_hat, 1) in the Storey estimate.
  bool clip_pi0 = false;
  FactorConfig factor;
  int max_iter = 50;

  /// Throws BadSpec unless tau in (0,1), nu in [0,1) and max_iter >= 1.
  void validate() const;
};

struct TestOutcome {
  Method method = Method::ORI;
  VectorXd t_scores;
  VectorXd p_values;
  double threshold = 0.0;
  IndexSet rejected;
  double fdr_estimate = 0.0;
  double pi0_hat = 1.0;
  double nu = 0.5;
  double tau = 0.1;
  std::optional<int> q_hat;
  std::vector<std::string> warnings;
};

/// V, S, R at a threshold. V and S (and FDP, POW) need the true split.
struct ErrorMetrics {
  Index R = 0;
  std::optional<Index> V;
  std::optional<Index> S;
  std::optional<Index> m1;

  /// V / max(R, 1). Throws MissingTruth without a split.
  double fdp() const;
  /// S / max(m1, 1). Throws MissingTruth without a split.
  double pow() const;
};

/// diag(Ytilde' Ytilde / n) with Ytilde = Q((1_n, X)) Y.
VectorXd lambda_z_eps(const Dataset& data);

/// T_ori = Lambda_ze^{-1/2} theta. Throws ZeroVariance when a variance <= 1e-14.
VectorXd t_original(const Dataset& data);
VectorXd t_original(const Dataset& data, const ThetaDecomposition& theta);

/// T_ora = Lambda_eps^{-1/2} (theta - Gamma' zeta), with true zeta and Sigma_eps.
VectorXd t_oracle(const ThetaDecomposition& theta, const FactorModel& truth);

/// T_adj = Lambda_eps_hat^{-1/2} (theta - Gamma_hat' zeta_hat).
VectorXd t_adjusted(const ThetaDecomposition& theta, const FactorEstimate& estimate,
                    const VectorXd& zeta_hat);
VectorXd t_adjusted(const VectorXd& theta, const MatrixXd& Gamma_hat,
                    const VectorXd& Lambda_eps_hat, const VectorXd& zeta_hat);

inline constexpr double kVarianceFloor = 1e-14;

/// Two-sided normal p-values 2 Phi(-|t|), kept inside (0, 1].
VectorXd p_values(const VectorXd& t);
double two_sided_p(double t);

/// #{j : p_j <= t}.
Index rejection_count(const VectorXd& p, double t);
IndexSet rejection_set(const VectorXd& p, double t);

ErrorMetrics count_processes(const VectorXd& p, double t,
                             const HypothesisSplit* split = nullptr);
/// Metrics of an explicit rejection set.
ErrorMetrics count_rejections(const IndexSet& rejected, const HypothesisSplit& split);

struct StoreyEstimate {
  double fdr_hat;
  double pi0_hat;
};

/// FDR_hat_nu(t) = pi0_hat(nu) m t / max(R(t), 1), pi0_hat(nu) = (m - R(nu)) / ((1 - nu) m).
StoreyEstimate storey_fdr_hat(const VectorXd& p, double nu, double t, bool clip_pi0 = false);

struct Threshold {
  double threshold = 0.0;
  double fdr_estimate = 0.0;
  double pi0_hat = 1.0;
};

/// Largest distinct p-value t with FDR_hat_nu(t) <= tau, or 0 if none qualifies.
Threshold threshold_star(const VectorXd& p, double nu, double tau, bool clip_pi0 = false);

/// Benjamini-Hochberg step-up: reject p_(1..k*) with k* = max{k : p_(k) <= k tau / m}.
IndexSet bh_procedure(const VectorXd& p, double tau);
/// p_(k*), or 0 when nothing is rejected.
double bh_threshold(const VectorXd& p, double tau);

/// Fills threshold, rejections and Storey quantities of `outcome` from its p-values.
void apply_threshold(TestOutcome& outcome, const TestingConfig& config);

/// Ground truth available in simulations.
struct SimulationTruth {
  FactorModel model;
  MatrixXd Z;  // n x q
  MatrixXd E;  // n x m
};

/// Runs one procedure end to end. ORA needs `truth`; the others ignore it.
TestOutcome run_procedure(Method method, const Dataset& data, const TestingConfig& config,
                          const SimulationTruth* truth = nullptr);

}  // namespace adafat
