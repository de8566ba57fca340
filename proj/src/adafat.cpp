#include "adafat/adafat.hpp"

#include <deque>
#include <functional>
#include <utility>

#include "adafat/error.hpp"

namespace adafat {

namespace {

constexpr std::size_t kCycleWindow = 8;

std::size_t hash_set(const IndexSet& s) {
  std::size_t h = s.size();
  for (const Index j : s) {
    h ^= std::hash<Index>{}(j) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

TestOutcome outcome_from(const AdaFatStep& step, const FactorEstimate& estimate,
                         const TestingConfig& config) {
  TestOutcome out;
  out.method = Method::ADAFAT;
  out.t_scores = step.t_scores;
  out.p_values = step.p_values;
  out.threshold = step.threshold.threshold;
  out.fdr_estimate = step.threshold.fdr_estimate;
  out.pi0_hat = step.threshold.pi0_hat;
  out.rejected = step.rejected;
  out.nu = config.nu;
  out.tau = config.tau;
  out.q_hat = estimate.q_hat;
  out.warnings = estimate.warnings;
  return out;
}

}  // namespace

AdaFatStep adafat_step(const FactorEstimate& estimate, const ThetaDecomposition& theta,
                       const IndexSet& null_subset, const TestingConfig& config) {
  AdaFatStep step;
  step.zeta_hat = estimate_zeta(estimate, theta, null_subset);
  step.t_scores = t_adjusted(theta, estimate, step.zeta_hat);
  step.p_values = p_values(step.t_scores);
  step.threshold = threshold_star(step.p_values, config.nu, config.tau, config.clip_pi0);
  if (step.threshold.threshold > 0.0) {
    step.rejected = rejection_set(step.p_values, step.threshold.threshold);
  }
  return step;
}

AdaFatResult adafat_run(const Dataset& data, const ThetaDecomposition& theta,
                        const FactorEstimate& estimate, const TestingConfig& config) {
  config.validate();
  AdaFatResult result;
  AdaFatTrace& trace = result.trace;

  // (S1) preprocessing by the original t-tests at the same (nu, tau).
  const VectorXd p_ori = p_values(t_original(data, theta));
  const Threshold th_ori = threshold_star(p_ori, config.nu, config.tau, config.clip_pi0);
  if (th_ori.threshold > 0.0) trace.ori_rejected = rejection_set(p_ori, th_ori.threshold);
  IndexSet subset = set_difference(full_index_set(data.m()), trace.ori_rejected);

  std::vector<AdaFatStep> steps;
  std::deque<std::pair<std::size_t, std::size_t>> recent;  // (hash, iteration)
  std::vector<std::string> notes;
  std::size_t chosen = 0;

  for (int it = 0; it < config.max_iter; ++it) {
    AdaFatStep step;
    try {
      step = adafat_step(estimate, theta, subset, config);
    } catch (const Error& e) {
      if (steps.empty() || (e.code() != ErrorCode::SubsetTooSmall &&
                            e.code() != ErrorCode::SingularGram)) {
        throw;
      }
      notes.push_back(std::string("stopped early: ") + e.what());
      break;
    }

    AdaFatIteration record;
    record.null_subset = subset;
    record.rejected = step.rejected;
    record.zeta_hat = step.zeta_hat;
    record.threshold = step.threshold.threshold;
    record.fdr_estimate = step.threshold.fdr_estimate;
    record.pi0_hat = step.threshold.pi0_hat;
    subset = set_difference(subset, step.rejected);
    record.updated_subset = subset;
    trace.iterations.push_back(std::move(record));
    steps.push_back(std::move(step));
    chosen = steps.size() - 1;

    const IndexSet& current = steps.back().rejected;
    if (steps.size() >= 2 && steps[steps.size() - 2].rejected == current) {
      trace.converged = true;
      break;
    }

    const std::size_t h = hash_set(current);
    bool cycle = false;
    for (const auto& [ph, idx] : recent) {
      if (ph == h && steps[idx].rejected == current) {
        // Iterations idx .. current-1 form a cycle; keep the member with the
        // smallest estimated FDR.
        std::size_t best = idx;
        for (std::size_t k = idx; k + 1 < steps.size(); ++k) {
          if (steps[k].threshold.fdr_estimate < steps[best].threshold.fdr_estimate) best = k;
        }
        chosen = best;
        cycle = true;
        break;
      }
    }
    if (cycle) {
      trace.cycle_detected = true;
      notes.push_back("rejection sets cycle; returning the member with smallest FDR estimate");
      break;
    }
    recent.emplace_back(h, steps.size() - 1);
    if (recent.size() > kCycleWindow) recent.pop_front();
  }

  trace.iterations_used = static_cast<int>(trace.iterations.size());
  if (!trace.converged && !trace.cycle_detected && notes.empty()) {
    notes.push_back("NoConvergence: max_iter reached");
  }
  result.outcome = outcome_from(steps[chosen], estimate, config);
  result.outcome.warnings.insert(result.outcome.warnings.end(), notes.begin(), notes.end());
  return result;
}

AdaFatResult adafat_run(const Dataset& data, const TestingConfig& config) {
  config.validate();
  const ThetaDecomposition theta = compute_theta(data);
  const FactorEstimate estimate = estimate_factors(data, config.factor);
  return adafat_run(data, theta, estimate, config);
}

}  // namespace adafat
