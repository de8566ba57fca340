#include "adafat/regression.hpp"

#include <cmath>

#include "adafat/error.hpp"

namespace adafat {

MatrixXd residualize(const MatrixXd& M, const MatrixXd& W) {
  if (W.cols() == 0) return M;
  if (W.rows() != M.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "residualize: row counts differ");
  }
  if (W.cols() >= W.rows() || singular_value_ratio(W) < kRankTolerance) {
    throw Error(ErrorCode::SingularProjection, "W'W is not invertible");
  }
  const Eigen::HouseholderQR<MatrixXd> qr(W);
  const MatrixXd U = qr.householderQ() * MatrixXd::Identity(W.rows(), W.cols());
  return M - U * (U.transpose() * M);
}

VectorXd projected_ones(const Dataset& data) {
  return residualize(VectorXd::Ones(data.n()), data.X());
}

namespace {

struct ProjectedIntercept {
  VectorXd w;  // Q(X) 1_n
  double c_n;
};

ProjectedIntercept projected_intercept(const Dataset& data) {
  VectorXd w = projected_ones(data);
  const double c2 = w.sum();  // 1'Q(X)1
  if (!(c2 >= 1e-8 * static_cast<double>(data.n()))) {
    throw Error(ErrorCode::DegenerateProjection, "1_n lies (numerically) in the span of X");
  }
  return {std::move(w), std::sqrt(c2)};
}

}  // namespace

ThetaDecomposition compute_theta(const Dataset& data) {
  const ProjectedIntercept pi = projected_intercept(data);
  ThetaDecomposition out;
  out.c_n = pi.c_n;
  out.theta = data.Y().transpose() * pi.w / pi.c_n;
  return out;
}

ThetaDecomposition decompose_theta_oracle(const Dataset& data, const FactorModel& truth,
                                          const MatrixXd& Z, const MatrixXd& E) {
  if (Z.rows() != data.n() || E.rows() != data.n() || E.cols() != data.m() ||
      Z.cols() != truth.q()) {
    throw Error(ErrorCode::DimensionMismatch, "Z or E does not match the dataset");
  }
  const ProjectedIntercept pi = projected_intercept(data);
  ThetaDecomposition out;
  out.c_n = pi.c_n;
  out.theta = data.Y().transpose() * pi.w / pi.c_n;
  out.zeta = Z.transpose() * pi.w / pi.c_n;
  out.eta = E.transpose() * pi.w / pi.c_n;
  return out;
}

VectorXd decomposition_residual(const ThetaDecomposition& theta, const FactorModel& truth) {
  if (!theta.zeta || !theta.eta) {
    throw Error(ErrorCode::MissingOracle, "decomposition needs zeta and eta");
  }
  return theta.theta -
         (theta.c_n * truth.alpha + truth.Gamma.transpose() * *theta.zeta + *theta.eta);
}

}  // namespace adafat
