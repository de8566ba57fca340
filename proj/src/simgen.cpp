#include "adafat/simgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "adafat/adafat.hpp"
#include "adafat/error.hpp"
#include "adafat/io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adafat {

std::string_view to_string(ErrorDist dist) {
  return dist == ErrorDist::Normal ? "normal" : "t3";
}

std::optional<ErrorDist> parse_error_dist(std::string_view name) {
  if (name == "normal") return ErrorDist::Normal;
  if (name == "t3") return ErrorDist::StudentT3;
  return std::nullopt;
}

MatrixXd SigmaEpsSpec::build(Index m) const {
  switch (kind) {
    case Kind::Identity:
      return MatrixXd::Identity(m, m);
    case Kind::Banded: {
      MatrixXd s = MatrixXd::Zero(m, m);
      for (Index j = 0; j < m; ++j) {
        for (Index k = std::max<Index>(0, j - bandwidth); k <= std::min(m - 1, j + bandwidth); ++k) {
          s(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
        }
      }
      return s;
    }
    case Kind::User:
      if (user.rows() != m || user.cols() != m) {
        throw Error(ErrorCode::BadSpec, "user Sigma_eps must be m x m");
      }
      return user;
  }
  return {};
}

void SimConfig::validate() const {
  if (!(pi1 >= 0.0 && pi1 < 1.0)) throw Error(ErrorCode::BadSpec, "pi1 must lie in [0,1)");
  if (reps < 1) throw Error(ErrorCode::BadSpec, "reps must be at least 1");
  if (q < 1) throw Error(ErrorCode::BadSpec, "q must be at least 1");
  if (m < 4 || n < p + 3) throw Error(ErrorCode::BadSpec, "panel dimensions too small");
  if (mu_x.size() != p || sigma_x.size() != p) {
    throw Error(ErrorCode::BadSpec, "mu_x and sigma_x need p entries");
  }
  if ((sigma_x.array() <= 0.0).any()) throw Error(ErrorCode::BadSpec, "sigma_x must be positive");
  if (!(alpha_magnitude >= 0.0)) throw Error(ErrorCode::BadSpec, "alpha_magnitude must be >= 0");
  if (sigma_eps.kind == SigmaEpsSpec::Kind::Banded &&
      (sigma_eps.bandwidth < 0 || std::abs(sigma_eps.rho) >= 1.0)) {
    throw Error(ErrorCode::BadSpec, "banded Sigma_eps needs bandwidth >= 0 and |rho| < 1");
  }
  if (base_model) {
    base_model->validate();
    if (base_model->m() != m || base_model->q() != q || base_model->B.rows() != p) {
      throw Error(ErrorCode::BadSpec, "base model does not match (m, q, p)");
    }
  }
  testing.validate();
}

VectorXd SimConfig::mu_z() const {
  const double base = p > 0 ? mu_x(0) : 0.0;
  return VectorXd::Constant(q, mu_z_scale * base);
}

std::uint64_t stream_seed(std::uint64_t seed, std::int64_t rep) {
  // SplitMix64 finaliser applied to the seed and the replication index.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ mix(static_cast<std::uint64_t>(rep) + 0x632be59bd9b4e019ULL));
}

namespace {

using Engine = std::mt19937_64;

double standard_draw(Engine& rng, ErrorDist dist) {
  if (dist == ErrorDist::Normal) return std::normal_distribution<double>(0.0, 1.0)(rng);
  // t_3 has variance 3.
  return std::student_t_distribution<double>(3.0)(rng) / std::sqrt(3.0);
}

MatrixXd standard_matrix(Engine& rng, Index rows, Index cols, ErrorDist dist) {
  MatrixXd out(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) out(r, c) = standard_draw(rng, dist);
  }
  return out;
}

Index lower_bandwidth(const MatrixXd& L) {
  Index bw = 0;
  for (Index c = 0; c < L.cols(); ++c) {
    for (Index r = L.rows() - 1; r > c + bw; --r) {
      if (L(r, c) != 0.0) {
        bw = r - c;
        break;
      }
    }
  }
  return bw;
}

}  // namespace

SimParameters draw_parameters(const SimConfig& config) {
  config.validate();
  const Index m = config.m;
  Engine rng(stream_seed(config.seed, -1));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto sign = [&] { return unif(rng) < 0.5 ? -1.0 : 1.0; };

  SimParameters params;
  FactorModel& model = params.model;
  VectorXd candidates(m);
  if (config.base_model) {
    model = *config.base_model;
    candidates = model.alpha;
  } else {
    model.Sigma_eps = config.sigma_eps.build(m);
    model.Gamma.resize(config.q, m);
    for (Index j = 0; j < m; ++j) {
      for (Index k = 0; k < config.q; ++k) model.Gamma(k, j) = sign() * (0.5 + unif(rng));
    }
    model.B.resize(config.p, m);
    for (Index j = 0; j < m; ++j) {
      for (Index k = 0; k < config.p; ++k) model.B(k, j) = 0.5 + unif(rng);
    }
    for (Index j = 0; j < m; ++j) {
      candidates(j) = sign() * config.alpha_magnitude * std::sqrt(model.Sigma_eps(j, j)) *
                      (1.0 + 0.5 * unif(rng));
    }
  }

  if (config.mu_z_mode == SimConfig::MuZMode::AlphaShift) {
    candidates += model.Gamma.transpose() * config.mu_z();
  }

  const Eigen::LLT<MatrixXd> llt(model.Sigma_eps);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::BadSpec, "Sigma_eps is not positive definite");
  }
  params.chol = llt.matrixL();
  params.chol_bandwidth = lower_bandwidth(params.chol);

  // Alternatives: the ceil(pi1 m) largest information ratios |alpha_j| / sqrt(sigma_jj).
  const auto m1 = static_cast<Index>(std::ceil(config.pi1 * static_cast<double>(m) - 1e-9));
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(candidates(a)) / std::sqrt(model.Sigma_eps(a, a)) >
           std::abs(candidates(b)) / std::sqrt(model.Sigma_eps(b, b));
  });
  model.alpha = VectorXd::Zero(m);
  IndexSet alt(order.begin(), order.begin() + m1);
  for (const Index j : alt) model.alpha(j) = candidates(j);
  params.split = HypothesisSplit::from_alternatives(std::move(alt), m);
  return params;
}

SimDraw generate(const SimConfig& config, const SimParameters& params, std::int64_t rep_index) {
  const Index n = config.n;
  const Index m = config.m;
  const FactorModel& model = params.model;
  Engine rng(stream_seed(config.seed, rep_index));

  MatrixXd X = standard_matrix(rng, n, config.p, config.error_dist);
  for (Index k = 0; k < config.p; ++k) {
    X.col(k) = X.col(k).array() * config.sigma_x(k) + config.mu_x(k);
  }
  MatrixXd Z = standard_matrix(rng, n, config.q, config.error_dist);
  if (config.mu_z_mode == SimConfig::MuZMode::FactorMean) Z.rowwise() += config.mu_z().transpose();
  const MatrixXd W = standard_matrix(rng, n, m, config.error_dist);

  // E = W L' using the band of the Cholesky factor.
  MatrixXd E = MatrixXd::Zero(n, m);
  const MatrixXd& L = params.chol;
  const Index bw = params.chol_bandwidth;
  for (Index j = 0; j < m; ++j) {
    for (Index k = std::max<Index>(0, j - bw); k <= j; ++k) {
      if (L(j, k) != 0.0) E.col(j) += L(j, k) * W.col(k);
    }
  }

  MatrixXd Y = E + Z * model.Gamma;
  Y.rowwise() += model.alpha.transpose();
  if (config.p > 0) Y += X * model.B;

  std::optional<MatrixXd> x_opt;
  if (config.p > 0) x_opt = std::move(X);
  SimDraw draw{validate_dataset(std::move(Y), std::move(x_opt)),
               SimulationTruth{model, std::move(Z), std::move(E)}, params.split};
  return draw;
}

SimDraw generate(const SimConfig& config, std::int64_t rep_index) {
  return generate(config, draw_parameters(config), rep_index);
}

Summary summarize(const std::vector<double>& values) {
  std::vector<double> v;
  std::copy_if(values.begin(), values.end(), std::back_inserter(v),
               [](double x) { return std::isfinite(x); });
  Summary s;
  if (v.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan, nan};
  }
  std::sort(v.begin(), v.end());
  auto quantile = [&](double prob) {
    const double pos = prob * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.median = quantile(0.5);
  s.q1 = quantile(0.25);
  s.q3 = quantile(0.75);
  s.q90 = quantile(0.9);
  return s;
}

ProcedureResults run_procedures(const std::vector<Method>& methods, const Dataset& data,
                                const TestingConfig& config, const SimulationTruth* truth) {
  ProcedureResults out;
  std::optional<ThetaDecomposition> theta;
  std::optional<FactorEstimate> estimate;
  std::optional<std::string> shared_failure;
  for (const Method method : methods) {
    try {
      if (method != Method::ADAFAT && method != Method::FATDW) {
        out.outcomes[method] = run_procedure(method, data, config, truth);
        continue;
      }
      if (shared_failure) {
        out.failures[method] = *shared_failure;
        continue;
      }
      try {
        if (!theta) theta = compute_theta(data);
        if (!estimate) estimate = estimate_factors(data, config.factor);
      } catch (const std::exception& e) {
        shared_failure = e.what();
        throw;
      }
      if (method == Method::ADAFAT) {
        out.outcomes[method] = adafat_run(data, *theta, *estimate, config).outcome;
      } else {
        TestOutcome o;
        o.method = method;
        o.t_scores = t_adjusted(*theta, *estimate,
                                estimate_zeta(*estimate, *theta, full_index_set(data.m())));
        o.p_values = p_values(o.t_scores);
        apply_threshold(o, config);
        o.q_hat = estimate->q_hat;
        o.warnings = estimate->warnings;
        out.outcomes[method] = std::move(o);
      }
    } catch (const std::exception& e) {
      out.failures[method] = e.what();
    }
  }
  return out;
}

SimReport run_monte_carlo(const SimConfig& config, const std::vector<Method>& methods, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  const SimParameters params = draw_parameters(config);
  const auto reps = static_cast<std::size_t>(config.reps);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  SimReport report;
  report.config = config;
  report.methods = methods;
  for (const Method method : methods) {
    report.series[method].fdp.assign(reps, nan);
    report.series[method].pow.assign(reps, nan);
  }
  // One slot per (rep, method); filled independently of scheduling.
  std::vector<std::vector<std::pair<double, double>>> results(
      reps, std::vector<std::pair<double, double>>(methods.size(), {nan, nan}));

#ifdef _OPENMP
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#else
  const int threads = 1;
#endif
  report.jobs = threads;

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t rep = 0; rep < static_cast<std::int64_t>(reps); ++rep) {
    auto& slot = results[static_cast<std::size_t>(rep)];
    std::optional<SimDraw> draw;
    try {
      draw = generate(config, params, rep);
    } catch (const std::exception&) {
      continue;
    }
    const ProcedureResults results_here =
        run_procedures(methods, draw->data, config.testing, &draw->truth);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto it = results_here.outcomes.find(methods[k]);
      if (it == results_here.outcomes.end()) continue;  // failure: stays NaN
      const ErrorMetrics metrics = count_rejections(it->second.rejected, draw->split);
      slot[k] = {metrics.fdp(), metrics.pow()};
    }
  }

  for (std::size_t k = 0; k < methods.size(); ++k) {
    MethodSeries& series = report.series[methods[k]];
    for (std::size_t r = 0; r < reps; ++r) {
      series.fdp[r] = results[r][k].first;
      series.pow[r] = results[r][k].second;
      if (std::isnan(series.fdp[r])) ++series.failures;
    }
    series.fdp_summary = summarize(series.fdp);
    series.pow_summary = summarize(series.pow);
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ThresholdedCovariance threshold_covariance(const MatrixXd& residuals) {
  const auto n = static_cast<double>(residuals.rows());
  const Index m = residuals.cols();
  const MatrixXd S = residuals.transpose() * residuals / n;
  const VectorXd sd = S.diagonal().cwiseSqrt();
  if ((sd.array() <= 0.0).any()) {
    throw Error(ErrorCode::ZeroVariance, "a residual series has zero variance");
  }
  const double rate = std::sqrt(std::log(static_cast<double>(m)) / n);
  for (double c = 0.5;; c += 0.25) {
    const double cut = c * rate;
    MatrixXd sigma = S;
    for (Index j = 0; j < m; ++j) {
      for (Index k = 0; k < m; ++k) {
        if (j != k && std::abs(S(j, k) / (sd(j) * sd(k))) < cut) sigma(j, k) = 0.0;
      }
    }
    if (Eigen::LLT<MatrixXd>(sigma).info() == Eigen::Success || cut >= 1.0) {
      return {std::move(sigma), c};
    }
  }
}

Calibration calibrate(const MatrixXd& returns, const MatrixXd& market, const SimConfig& overrides) {
  if (returns.rows() <= 10) throw Error(ErrorCode::TooFewRows, "calibration needs n > 10");
  const Dataset data = validate_dataset(returns, market);
  const MatrixXd Xt = data.augmented_x();
  const MatrixXd coef = Xt.colPivHouseholderQr().solve(data.Y());  // (p+1) x m
  const MatrixXd Y_tilde = data.Y() - Xt * coef;

  FactorConfig fc = overrides.testing.factor;
  fc.kappa = std::min<int>(fc.kappa, static_cast<int>(std::min(data.m(), data.n())) - 1);
  const QSelection sel = select_q(Y_tilde, fc);
  const PcaResult pca = pca_top_k(Y_tilde, sel.q_hat);
  const MatrixXd residuals = Y_tilde - pca.Z_hat * pca.Gamma_hat;
  ThresholdedCovariance cov = threshold_covariance(residuals);

  Calibration out;
  out.q_hat = sel.q_hat;
  out.threshold_constant = cov.constant;
  out.model.alpha = coef.row(0).transpose();
  out.model.B = coef.bottomRows(data.p());
  out.model.Gamma = pca.Gamma_hat;
  out.model.Sigma_eps = std::move(cov.sigma);

  SimConfig cfg = overrides;
  cfg.m = data.m();
  cfg.n = data.n();
  cfg.p = data.p();
  cfg.q = sel.q_hat;
  cfg.mu_x = data.X().colwise().mean().transpose();
  cfg.sigma_x = ((data.X().rowwise() - cfg.mu_x.transpose()).colwise().squaredNorm() /
                 static_cast<double>(data.n()))
                    .cwiseSqrt()
                    .transpose();
  cfg.sigma_eps.kind = SigmaEpsSpec::Kind::User;
  cfg.sigma_eps.user = out.model.Sigma_eps;
  cfg.base_model = out.model;
  out.config = std::move(cfg);
  return out;
}

Calibration calibrate_from_returns(const std::string& returns_csv, const std::string& market_csv,
                                   const SimConfig& overrides) {
  return calibrate(io::read_csv_matrix(returns_csv), io::read_csv_matrix(market_csv), overrides);
}

}  // namespace adafat
