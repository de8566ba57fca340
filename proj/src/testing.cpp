#include "adafat/testing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "adafat/error.hpp"
#include "adafat/kernels.hpp"

namespace adafat {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::ORI: return "ORI";
    case Method::ORA: return "ORA";
    case Method::FATDW: return "FATDW";
    case Method::ADAFAT: return "ADAFAT";
    case Method::FATLD: return "FATLD";
    case Method::BH: return "BH";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  lower.erase(std::remove(lower.begin(), lower.end(), '-'), lower.end());
  if (lower == "ori") return Method::ORI;
  if (lower == "ora") return Method::ORA;
  if (lower == "fatdw") return Method::FATDW;
  if (lower == "adafat") return Method::ADAFAT;
  if (lower == "fatld") return Method::FATLD;
  if (lower == "bh") return Method::BH;
  return std::nullopt;
}

void TestingConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::BadSpec, "tau must lie in (0,1)");
  if (!(nu >= 0.0 && nu < 1.0)) throw Error(ErrorCode::BadSpec, "nu must lie in [0,1)");
  if (max_iter < 1) throw Error(ErrorCode::BadSpec, "max_iter must be positive");
}

double ErrorMetrics::fdp() const {
  if (!V) throw Error(ErrorCode::MissingTruth, "FDP needs the true hypothesis split");
  return static_cast<double>(*V) / static_cast<double>(std::max<Index>(R, 1));
}

double ErrorMetrics::pow() const {
  if (!S || !m1) throw Error(ErrorCode::MissingTruth, "POW needs the true hypothesis split");
  return static_cast<double>(*S) / static_cast<double>(std::max<Index>(*m1, 1));
}

VectorXd lambda_z_eps(const Dataset& data) {
  const MatrixXd Y_tilde = residualize(data.Y(), data.augmented_x());
  return kernels::column_sum_squares(Y_tilde) / static_cast<double>(data.n());
}

namespace {

VectorXd studentize(const VectorXd& numerator, const VectorXd& variance) {
  for (Index j = 0; j < variance.size(); ++j) {
    if (!(variance(j) > kVarianceFloor)) {
      throw Error(ErrorCode::ZeroVariance, "variance of test " + std::to_string(j) +
                                               " is numerically zero");
    }
  }
  return numerator.array() / variance.array().sqrt();
}

}  // namespace

VectorXd t_original(const Dataset& data, const ThetaDecomposition& theta) {
  return studentize(theta.theta, lambda_z_eps(data));
}

VectorXd t_original(const Dataset& data) { return t_original(data, compute_theta(data)); }

VectorXd t_oracle(const ThetaDecomposition& theta, const FactorModel& truth) {
  if (!theta.zeta) throw Error(ErrorCode::MissingOracle, "oracle statistic needs the true zeta");
  return studentize(theta.theta - truth.Gamma.transpose() * *theta.zeta,
                    truth.sigma_eps_diag());
}

VectorXd t_adjusted(const VectorXd& theta, const MatrixXd& Gamma_hat,
                    const VectorXd& Lambda_eps_hat, const VectorXd& zeta_hat) {
  return studentize(theta - Gamma_hat.transpose() * zeta_hat, Lambda_eps_hat);
}

VectorXd t_adjusted(const ThetaDecomposition& theta, const FactorEstimate& estimate,
                    const VectorXd& zeta_hat) {
  return t_adjusted(theta.theta, estimate.Gamma_hat, estimate.Lambda_eps_hat, zeta_hat);
}

double two_sided_p(double t) {
  // 2 Phi(-|t|) = erfc(|t| / sqrt(2)); floored so the value stays positive.
  const double p = std::erfc(std::abs(t) / std::sqrt(2.0));
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

VectorXd p_values(const VectorXd& t) { return t.unaryExpr([](double v) { return two_sided_p(v); }); }

Index rejection_count(const VectorXd& p, double t) { return (p.array() <= t).count(); }

IndexSet rejection_set(const VectorXd& p, double t) {
  IndexSet out;
  for (Index j = 0; j < p.size(); ++j) {
    if (p(j) <= t) out.push_back(j);
  }
  return out;
}

ErrorMetrics count_processes(const VectorXd& p, double t, const HypothesisSplit* split) {
  ErrorMetrics out;
  out.R = rejection_count(p, t);
  if (split) {
    Index s = 0;
    for (const Index j : split->alt_set) s += p(j) <= t ? 1 : 0;
    out.S = s;
    out.V = out.R - s;
    out.m1 = static_cast<Index>(split->m1());
  }
  return out;
}

ErrorMetrics count_rejections(const IndexSet& rejected, const HypothesisSplit& split) {
  ErrorMetrics out;
  out.R = static_cast<Index>(rejected.size());
  Index s = 0;
  for (const Index j : rejected) s += split.is_alternative(j) ? 1 : 0;
  out.S = s;
  out.V = out.R - s;
  out.m1 = static_cast<Index>(split.m1());
  return out;
}

namespace {

double pi0_from_sorted(const std::vector<double>& sorted, double nu, bool clip) {
  const double m = static_cast<double>(sorted.size());
  const auto r_nu =
      static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), nu) - sorted.begin());
  const double pi0 = (m - r_nu) / ((1.0 - nu) * m);
  return clip ? std::min(pi0, 1.0) : pi0;
}

std::vector<double> sorted_copy(const VectorXd& p) {
  std::vector<double> s(p.data(), p.data() + p.size());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

StoreyEstimate storey_fdr_hat(const VectorXd& p, double nu, double t, bool clip_pi0) {
  const std::vector<double> sorted = sorted_copy(p);
  const double pi0 = pi0_from_sorted(sorted, nu, clip_pi0);
  const auto r = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) -
                                     sorted.begin());
  const double m = static_cast<double>(p.size());
  return {pi0 * m * t / std::max(r, 1.0), pi0};
}

Threshold threshold_star(const VectorXd& p, double nu, double tau, bool clip_pi0) {
  const std::vector<double> sorted = sorted_copy(p);
  Threshold out;
  out.pi0_hat = pi0_from_sorted(sorted, nu, clip_pi0);
  const double m = static_cast<double>(sorted.size());
  // Candidates are the distinct p-values; R(t) at a candidate is one past its
  // last occurrence in sorted order.
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    const double t = sorted[i];
    const double fdr = out.pi0_hat * m * t / static_cast<double>(i + 1);
    if (fdr <= tau) {
      out.threshold = t;
      out.fdr_estimate = fdr;
    }
  }
  return out;
}

double bh_threshold(const VectorXd& p, double tau) {
  const std::vector<double> sorted = sorted_copy(p);
  const double m = static_cast<double>(sorted.size());
  double cut = 0.0;
  for (std::size_t k = 1; k <= sorted.size(); ++k) {
    if (sorted[k - 1] <= static_cast<double>(k) * tau / m) cut = sorted[k - 1];
  }
  return cut;
}

IndexSet bh_procedure(const VectorXd& p, double tau) {
  const double cut = bh_threshold(p, tau);
  return cut > 0.0 ? rejection_set(p, cut) : IndexSet{};
}

void apply_threshold(TestOutcome& outcome, const TestingConfig& config) {
  const Threshold th = threshold_star(outcome.p_values, config.nu, config.tau, config.clip_pi0);
  outcome.threshold = th.threshold;
  outcome.fdr_estimate = th.fdr_estimate;
  outcome.pi0_hat = th.pi0_hat;
  outcome.nu = config.nu;
  outcome.tau = config.tau;
  outcome.rejected = th.threshold > 0.0 ? rejection_set(outcome.p_values, th.threshold)
                                        : IndexSet{};
}

}  // namespace adafat
