#include <algorithm>

#include "adafat/adafat.hpp"
#include "adafat/error.hpp"
#include "adafat/testing.hpp"

namespace adafat {

namespace {

TestOutcome from_scores(Method method, VectorXd t, const TestingConfig& config) {
  TestOutcome out;
  out.method = method;
  out.p_values = p_values(t);
  out.t_scores = std::move(t);
  apply_threshold(out, config);
  return out;
}

}  // namespace

TestOutcome run_procedure(Method method, const Dataset& data, const TestingConfig& config,
                          const SimulationTruth* truth) {
  config.validate();
  switch (method) {
    case Method::ORI:
      return from_scores(method, t_original(data), config);

    case Method::BH: {
      // Classic step-up on the original t-test p-values (pi0 taken as 1).
      TestOutcome out;
      out.method = method;
      out.t_scores = t_original(data);
      out.p_values = p_values(out.t_scores);
      out.threshold = bh_threshold(out.p_values, config.tau);
      out.rejected = bh_procedure(out.p_values, config.tau);
      out.pi0_hat = 1.0;
      out.nu = 0.0;
      out.tau = config.tau;
      out.fdr_estimate = static_cast<double>(data.m()) * out.threshold /
                         static_cast<double>(std::max<std::size_t>(out.rejected.size(), 1));
      return out;
    }

    case Method::ORA: {
      if (!truth) throw Error(ErrorCode::MissingOracle, "oracle requires simulation truth");
      const ThetaDecomposition theta =
          decompose_theta_oracle(data, truth->model, truth->Z, truth->E);
      return from_scores(method, t_oracle(theta, truth->model), config);
    }

    case Method::FATDW: {
      const ThetaDecomposition theta = compute_theta(data);
      const FactorEstimate est = estimate_factors(data, config.factor);
      const VectorXd zeta = estimate_zeta(est, theta, full_index_set(data.m()));
      TestOutcome out = from_scores(method, t_adjusted(theta, est, zeta), config);
      out.q_hat = est.q_hat;
      out.warnings = est.warnings;
      return out;
    }

    case Method::FATLD: {
      // Factors from Q(X) Y (intercept kept in the panel) and an uncentred
      // cross-sectional regression for zeta. The factor count is FAT-DW's:
      // selected on Q(X) Y, the IC adds a factor that absorbs alpha itself.
      const ThetaDecomposition theta = compute_theta(data);
      const int q_hat = estimate_factors(data, config.factor).q_hat;
      const MatrixXd panel = residualize(data.Y(), data.X());
      const PcaResult pca = pca_top_k(panel, q_hat);
      FactorEstimate est;
      est.q_hat = q_hat;
      est.E_hat = panel - pca.Z_hat * pca.Gamma_hat;
      est.Lambda_eps_hat =
          est.E_hat.colwise().squaredNorm().transpose() / static_cast<double>(data.n());
      est.Z_hat = pca.Z_hat;
      est.Gamma_hat = pca.Gamma_hat;
      est.eigvals = pca.eigvals;
      const VectorXd zeta = estimate_zeta(est.Gamma_hat, theta.theta, full_index_set(data.m()),
                                          Centering::Uncentered);
      TestOutcome out = from_scores(method, t_adjusted(theta, est, zeta), config);
      out.q_hat = est.q_hat;
      return out;
    }

    case Method::ADAFAT:
      return adafat_run(data, config).outcome;
  }
  throw Error(ErrorCode::BadSpec, "unknown method");
}

}  // namespace adafat
