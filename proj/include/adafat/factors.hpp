#pragma once

#include <string>
#include <vector>

#include "adafat/model.hpp"
#include "adafat/regression.hpp"

namespace adafat {

enum class Penalty {
  /// g(m,n) = ((m+n)/(mn)) log(mn/(m+n)).
  BaiNg,
};

double penalty_value(Penalty penalty, Index m, Index n);

struct FactorConfig {
  int kappa = 8;
  Penalty penalty = Penalty::BaiNg;

  /// Throws BadSpec unless 1 <= kappa <= min(m,n) - 1.
  void validate(Index m, Index n) const;
};

/// Eigen-decomposition of the n x n matrix Ytilde Ytilde' / (mn), sorted by
/// decreasing eigenvalue. Each eigenvector is sign-normalised so that its entry
/// of largest magnitude is positive.
struct Spectrum {
  VectorXd eigvals;
  MatrixXd eigvecs;
};

Spectrum panel_spectrum(const MatrixXd& Y_tilde);

struct PcaResult {
  MatrixXd Z_hat;      // n x k, Z_hat' Z_hat / n = I_k
  MatrixXd Gamma_hat;  // k x m, Z_hat' Y_tilde / n
  VectorXd eigvals;    // k leading eigenvalues of Ytilde Ytilde' / (mn)
  bool degenerate_spectrum = false;
};

/// Leading-k principal components of the residualised panel.
PcaResult pca_top_k(const MatrixXd& Y_tilde, int k);
PcaResult pca_top_k(const MatrixXd& Y_tilde, const Spectrum& spectrum, int k);

struct QSelection {
  int q_hat = 1;
  std::vector<double> ic;            // IC(1..kappa)
  std::vector<double> residual_ss;   // sum of squared residuals at each k
};

/// argmin_k IC(k) over k = 1..kappa, ties toward the smaller k.
QSelection select_q(const MatrixXd& Y_tilde, const FactorConfig& config);
QSelection select_q(const MatrixXd& Y_tilde, const Spectrum& spectrum, const FactorConfig& config);

struct FactorEstimate {
  MatrixXd Z_hat;           // n x q_hat
  MatrixXd Gamma_hat;       // q_hat x m
  int q_hat = 0;
  VectorXd eigvals;         // q_hat
  VectorXd Lambda_eps_hat;  // m, diag(E_hat' E_hat / n)
  MatrixXd E_hat;           // n x m
  std::vector<double> ic;
  std::vector<std::string> warnings;
};

/// Full estimation: Ytilde = Q((1_n, X)) Y, factor count by IC, PCA at q_hat,
/// residual variances.
FactorEstimate estimate_factors(const Dataset& data, const FactorConfig& config);

/// Estimation on an already residualised panel.
FactorEstimate estimate_factors_from_panel(const MatrixXd& Y_tilde, const FactorConfig& config);

enum class Centering { Centered, Uncentered };

/// zeta_hat = [G0 C G0']^{-1} G0 C theta0 with G0, theta0 restricted to `subset`
/// and C = Q(1_{|subset|}) (or identity when Uncentered). Throws SubsetTooSmall
/// when |subset| <= q_hat + 1 and SingularGram when the Gram condition number
/// exceeds 1e12.
VectorXd estimate_zeta(const MatrixXd& Gamma_hat, const VectorXd& theta, const IndexSet& subset,
                       Centering centering = Centering::Centered);
VectorXd estimate_zeta(const FactorEstimate& estimate, const ThetaDecomposition& theta,
                       const IndexSet& subset);

inline constexpr double kGramConditionLimit = 1e12;

/// H = Gamma Gamma' Ztilde' Z_hat D^{-1} / (mn). Throws SingularD when an
/// eigenvalue is <= 1e-14.
MatrixXd rotation_H(const FactorEstimate& estimate, const MatrixXd& Gamma, const MatrixXd& Z_tilde);

}  // namespace adafat
