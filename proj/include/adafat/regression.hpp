#pragma once

#include <optional>

#include "adafat/model.hpp"

namespace adafat {

/// theta = Y' Q(X) 1_n / c_n with c_n = sqrt(1_n' Q(X) 1_n). With ground truth,
/// theta = c_n alpha + Gamma' zeta + eta.
struct ThetaDecomposition {
  VectorXd theta;
  double c_n = 0.0;
  std::optional<VectorXd> zeta;
  std::optional<VectorXd> eta;
};

/// Q(W) M = M - W (W'W)^{-1} W' M, computed from a thin QR of W. An empty W
/// returns M unchanged. Throws SingularProjection when W is rank deficient.
MatrixXd residualize(const MatrixXd& M, const MatrixXd& W);

/// Q(X) 1_n for the dataset's X (intercept excluded).
VectorXd projected_ones(const Dataset& data);

/// Throws DegenerateProjection when 1_n'Q(X)1_n < 1e-8 n.
ThetaDecomposition compute_theta(const Dataset& data);

/// compute_theta plus zeta = Z'Q(X)1_n / c_n and eta = E'Q(X)1_n / c_n.
ThetaDecomposition decompose_theta_oracle(const Dataset& data, const FactorModel& truth,
                                          const MatrixXd& Z, const MatrixXd& E);

/// theta - (c_n alpha + Gamma' zeta + eta); requires zeta and eta.
VectorXd decomposition_residual(const ThetaDecomposition& theta, const FactorModel& truth);

}  // namespace adafat
