#pragma once

#include <vector>

#include "adafat/factors.hpp"
#include "adafat/testing.hpp"

namespace adafat {

/// One pass of the refinement loop.
struct AdaFatIteration {
  IndexSet null_subset;     // estimated nulls used for zeta_hat
  IndexSet rejected;        // rejections of the adjusted tests
  IndexSet updated_subset;  // null_subset \ rejected
  VectorXd zeta_hat;
  double threshold = 0.0;
  double fdr_estimate = 0.0;
  double pi0_hat = 1.0;
};

struct AdaFatTrace {
  IndexSet ori_rejected;
  std::vector<AdaFatIteration> iterations;
  bool converged = false;
  bool cycle_detected = false;
  int iterations_used = 0;
};

struct AdaFatResult {
  TestOutcome outcome;
  AdaFatTrace trace;
};

/// Adjusted statistics and thresholding for one null subset, with the loading
/// estimates held fixed.
struct AdaFatStep {
  VectorXd zeta_hat;
  VectorXd t_scores;
  VectorXd p_values;
  Threshold threshold;
  IndexSet rejected;
};

AdaFatStep adafat_step(const FactorEstimate& estimate, const ThetaDecomposition& theta,
                       const IndexSet& null_subset, const TestingConfig& config);

/// Iterates zeta_hat on a shrinking estimated-null subset until the rejection
/// set repeats. Gamma_hat, Lambda_eps_hat and q_hat are estimated once.
AdaFatResult adafat_run(const Dataset& data, const TestingConfig& config);
AdaFatResult adafat_run(const Dataset& data, const ThetaDecomposition& theta,
                        const FactorEstimate& estimate, const TestingConfig& config);

}  // namespace adafat
