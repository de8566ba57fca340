#include "adafat/factors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adafat/error.hpp"
#include "adafat/kernels.hpp"

namespace adafat {

namespace {

// Residual sums of squares below this fraction of the total are float noise;
// flooring them keeps log() in IC(k) from ranking rounding errors.
constexpr double kResidualFloor = 1e-20;
constexpr double kSeparationTolerance = 1e-12;

bool separated(const VectorXd& eigvals, int k) {
  const double top = std::max(eigvals(0), std::numeric_limits<double>::min());
  if (eigvals(k - 1) <= kSeparationTolerance * top) return false;
  if (k >= eigvals.size()) return true;
  return eigvals(k - 1) - eigvals(k) > kSeparationTolerance * top;
}

}  // namespace

double penalty_value(Penalty penalty, Index m, Index n) {
  const double mm = static_cast<double>(m);
  const double nn = static_cast<double>(n);
  switch (penalty) {
    case Penalty::BaiNg:
      return (mm + nn) / (mm * nn) * std::log(mm * nn / (mm + nn));
  }
  return 0.0;
}

void FactorConfig::validate(Index m, Index n) const {
  if (kappa < 1 || kappa > std::min(m, n) - 1) {
    throw Error(ErrorCode::BadSpec, "kappa must lie in [1, min(m,n)-1], got " +
                                        std::to_string(kappa));
  }
}

Spectrum panel_spectrum(const MatrixXd& Y_tilde) {
  const double scale = static_cast<double>(Y_tilde.rows()) * static_cast<double>(Y_tilde.cols());
  const MatrixXd gram = kernels::row_gram(Y_tilde) / scale;
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::EigenFailure, "symmetric eigensolver did not converge");
  }
  // Eigen returns ascending order.
  Spectrum out;
  out.eigvals = solver.eigenvalues().reverse();
  out.eigvecs = solver.eigenvectors().rowwise().reverse();
  for (Index c = 0; c < out.eigvecs.cols(); ++c) {
    Index arg = 0;
    out.eigvecs.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.eigvecs(arg, c) < 0.0) out.eigvecs.col(c) *= -1.0;
  }
  return out;
}

PcaResult pca_top_k(const MatrixXd& Y_tilde, const Spectrum& spectrum, int k) {
  const Index n = Y_tilde.rows();
  if (k < 1 || k > std::min(n, Y_tilde.cols()) - 1) {
    throw Error(ErrorCode::BadSpec, "pca_top_k: k out of range");
  }
  PcaResult out;
  out.Z_hat = std::sqrt(static_cast<double>(n)) * spectrum.eigvecs.leftCols(k);
  out.Gamma_hat = kernels::scaled_cross_product(out.Z_hat, Y_tilde, static_cast<double>(n));
  out.eigvals = spectrum.eigvals.head(k);
  out.degenerate_spectrum = !separated(spectrum.eigvals, k);
  return out;
}

PcaResult pca_top_k(const MatrixXd& Y_tilde, int k) {
  return pca_top_k(Y_tilde, panel_spectrum(Y_tilde), k);
}

QSelection select_q(const MatrixXd& Y_tilde, const Spectrum& spectrum,
                    const FactorConfig& config) {
  const Index m = Y_tilde.cols();
  const Index n = Y_tilde.rows();
  config.validate(m, n);
  const double mn = static_cast<double>(m) * static_cast<double>(n);
  const double g = penalty_value(config.penalty, m, n);
  const double total = kernels::column_sum_squares(Y_tilde).sum();
  const double floor = std::max(kResidualFloor * total, std::numeric_limits<double>::min());

  QSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= config.kappa; ++k) {
    const PcaResult pca = pca_top_k(Y_tilde, spectrum, k);
    const double ss =
        kernels::residual_column_sum_squares(Y_tilde, pca.Z_hat, pca.Gamma_hat).sum();
    const double ic = std::log(std::max(ss, floor) / mn) + k * g;
    out.residual_ss.push_back(ss);
    out.ic.push_back(ic);
    if (ic < best) {
      best = ic;
      out.q_hat = k;
    }
  }
  return out;
}

QSelection select_q(const MatrixXd& Y_tilde, const FactorConfig& config) {
  config.validate(Y_tilde.cols(), Y_tilde.rows());
  return select_q(Y_tilde, panel_spectrum(Y_tilde), config);
}

FactorEstimate estimate_factors_from_panel(const MatrixXd& Y_tilde, const FactorConfig& config) {
  config.validate(Y_tilde.cols(), Y_tilde.rows());
  const Spectrum spectrum = panel_spectrum(Y_tilde);
  const QSelection selection = select_q(Y_tilde, spectrum, config);
  PcaResult pca = pca_top_k(Y_tilde, spectrum, selection.q_hat);

  FactorEstimate est;
  est.q_hat = selection.q_hat;
  est.ic = selection.ic;
  est.E_hat = Y_tilde - pca.Z_hat * pca.Gamma_hat;
  est.Lambda_eps_hat =
      kernels::column_sum_squares(est.E_hat) / static_cast<double>(Y_tilde.rows());
  est.Z_hat = std::move(pca.Z_hat);
  est.Gamma_hat = std::move(pca.Gamma_hat);
  est.eigvals = std::move(pca.eigvals);
  if (pca.degenerate_spectrum) {
    est.warnings.push_back("DegenerateSpectrum: eigenvalue " + std::to_string(est.q_hat) +
                           " is not separated from its successor");
  }
  return est;
}

FactorEstimate estimate_factors(const Dataset& data, const FactorConfig& config) {
  const MatrixXd Y_tilde = residualize(data.Y(), data.augmented_x());
  FactorEstimate est = estimate_factors_from_panel(Y_tilde, config);
  // The projection can annihilate the panel up to rounding, in which case the
  // spectrum is pure float noise even if its eigenvalues look separated.
  if (Y_tilde.squaredNorm() <= kResidualFloor * data.Y().squaredNorm() && est.warnings.empty()) {
    est.warnings.push_back("DegenerateSpectrum: the projected panel is numerically zero");
  }
  return est;
}

VectorXd estimate_zeta(const MatrixXd& Gamma_hat, const VectorXd& theta, const IndexSet& subset,
                       Centering centering) {
  const Index q = Gamma_hat.rows();
  const Index m0 = static_cast<Index>(subset.size());
  if (m0 <= q + 1) {
    throw Error(ErrorCode::SubsetTooSmall, "subset of size " + std::to_string(m0) +
                                               " cannot identify " + std::to_string(q) +
                                               " factors");
  }
  MatrixXd G0(q, m0);
  VectorXd theta0(m0);
  for (Index c = 0; c < m0; ++c) {
    const Index j = subset[static_cast<std::size_t>(c)];
    G0.col(c) = Gamma_hat.col(j);
    theta0(c) = theta(j);
  }
  if (centering == Centering::Centered) {
    G0.colwise() -= G0.rowwise().mean();
  }
  // With G0 centred, G0 Q theta0 = G0 theta0.
  const MatrixXd gram = G0 * G0.transpose();
  const VectorXd rhs = G0 * theta0;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || !(lmin > 0.0) || lmax / lmin > kGramConditionLimit) {
    throw Error(ErrorCode::SingularGram, "loading Gram matrix is singular or ill-conditioned");
  }
  return eig.eigenvectors() *
         (eig.eigenvectors().transpose() * rhs).cwiseQuotient(eig.eigenvalues());
}

VectorXd estimate_zeta(const FactorEstimate& estimate, const ThetaDecomposition& theta,
                       const IndexSet& subset) {
  return estimate_zeta(estimate.Gamma_hat, theta.theta, subset, Centering::Centered);
}

MatrixXd rotation_H(const FactorEstimate& estimate, const MatrixXd& Gamma,
                    const MatrixXd& Z_tilde) {
  const Index q = estimate.q_hat;
  if (Gamma.rows() != q || Z_tilde.cols() != q || Z_tilde.rows() != estimate.Z_hat.rows() ||
      Gamma.cols() != estimate.Gamma_hat.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "rotation_H requires q_hat == q");
  }
  if ((estimate.eigvals.array() <= 1e-14).any()) {
    throw Error(ErrorCode::SingularD, "an eigenvalue in D is numerically zero");
  }
  const double mn = static_cast<double>(Gamma.cols()) * static_cast<double>(Z_tilde.rows());
  const MatrixXd inner = Gamma * Gamma.transpose() * Z_tilde.transpose() * estimate.Z_hat / mn;
  return inner * estimate.eigvals.cwiseInverse().asDiagonal();
}

}  // namespace adafat
