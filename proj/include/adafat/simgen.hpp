#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "adafat/model.hpp"
#include "adafat/testing.hpp"

namespace adafat {

enum class ErrorDist { Normal, StudentT3 };

std::string_view to_string(ErrorDist dist);
std::optional<ErrorDist> parse_error_dist(std::string_view name);

struct SigmaEpsSpec {
  enum class Kind { Identity, Banded, User };
  Kind kind = Kind::Banded;
  int bandwidth = 3;
  double rho = 0.3;
  MatrixXd user;  // m x m when kind == User

  /// Identity, banded rho^|j-k| for |j-k| <= bandwidth, or the user matrix.
  MatrixXd build(Index m) const;
};

struct SimConfig {
  Index m = 500;
  Index n = 200;
  Index q = 3;
  Index p = 1;
  double pi1 = 0.1;
  /// Nonzero |alpha_j| = alpha_magnitude * sqrt(sigma_jj) * (1 + 0.5 u).
  double alpha_magnitude = 0.24;
  ErrorDist error_dist = ErrorDist::Normal;
  VectorXd mu_x = VectorXd::Constant(1, 0.5);
  VectorXd sigma_x = VectorXd::Ones(1);
  /// mu_z = mu_z_scale * mu_x(0) * 1_q.
  double mu_z_scale = 0.0;
  /// AlphaShift adds Gamma' mu_z to the alpha candidates before the
  /// alternatives are selected; FactorMean gives z_i mean mu_z instead.
  enum class MuZMode { AlphaShift, FactorMean };
  MuZMode mu_z_mode = MuZMode::AlphaShift;
  SigmaEpsSpec sigma_eps;
  int reps = 100;
  std::uint64_t seed = 1;
  TestingConfig testing;
  /// Calibrated parameters; when present they replace the synthetic draws of
  /// alpha candidates, B, Gamma and Sigma_eps.
  std::optional<FactorModel> base_model;

  /// Throws BadSpec on violated invariants (0 <= pi1 < 1, reps >= 1, q >= 1, ...).
  void validate() const;
  VectorXd mu_z() const;
};

struct SimDraw {
  Dataset data;
  SimulationTruth truth;
  HypothesisSplit split;
};

/// Seed for replication `rep` (or the parameter stream when rep < 0), mixed
/// from (seed, rep) so replications are independent of execution order.
std::uint64_t stream_seed(std::uint64_t seed, std::int64_t rep);

/// Fixed model parameters shared by all replications of a configuration.
struct SimParameters {
  FactorModel model;
  HypothesisSplit split;
  MatrixXd chol;   // lower Cholesky factor of Sigma_eps
  Index chol_bandwidth = 0;
};

/// Throws BadSpec when Sigma_eps is not positive definite.
SimParameters draw_parameters(const SimConfig& config);

/// Data for one replication; deterministic given (config.seed, rep_index).
SimDraw generate(const SimConfig& config, const SimParameters& params, std::int64_t rep_index);
SimDraw generate(const SimConfig& config, std::int64_t rep_index);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double q90 = 0.0;
};

/// Summary over finite entries; linear-interpolated quantiles.
Summary summarize(const std::vector<double>& values);

struct MethodSeries {
  std::vector<double> fdp;  // NaN for failed replications
  std::vector<double> pow;
  int failures = 0;
  Summary fdp_summary;
  Summary pow_summary;
};

struct SimReport {
  SimConfig config;
  std::vector<Method> methods;
  std::map<Method, MethodSeries> series;
  double elapsed_seconds = 0.0;
  int jobs = 1;
};

/// Runs every method on every replication. Failures are recorded per method.
/// `jobs` <= 0 uses the OpenMP default thread count.
SimReport run_monte_carlo(const SimConfig& config, const std::vector<Method>& methods,
                          int jobs = 1);

struct ProcedureResults {
  std::map<Method, TestOutcome> outcomes;
  std::map<Method, std::string> failures;
};

/// Outcomes for several methods on one dataset, sharing theta and the factor
/// estimate between FATDW and ADAFAT. A failing method is recorded in
/// `failures` and does not stop the others.
ProcedureResults run_procedures(const std::vector<Method>& methods, const Dataset& data,
                                const TestingConfig& config, const SimulationTruth* truth);

struct Calibration {
  FactorModel model;
  SimConfig config;
  int q_hat = 0;
  double threshold_constant = 0.0;
};

/// Fits alpha, B by OLS on the market columns, Gamma by PCA at the IC-selected
/// q_hat, and Sigma_eps by correlation thresholding of the residual covariance.
Calibration calibrate(const MatrixXd& returns, const MatrixXd& market,
                      const SimConfig& overrides = {});
Calibration calibrate_from_returns(const std::string& returns_csv, const std::string& market_csv,
                                   const SimConfig& overrides = {});

/// Entries |R_jk| < threshold of the residual correlation are zeroed; the
/// threshold C sqrt(log m / n) grows from C = 0.5 until the result is positive
/// definite.
struct ThresholdedCovariance {
  MatrixXd sigma;
  double constant = 0.0;
};
ThresholdedCovariance threshold_covariance(const MatrixXd& residuals);

}  // namespace adafat
