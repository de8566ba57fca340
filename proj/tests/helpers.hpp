#pragma once

#include <random>

#include <Eigen/Dense>

#include "adafat/simgen.hpp"

namespace adafat::test {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = nd(rng);
  return M;
}

inline Eigen::VectorXd uniform_p(Eigen::Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd p(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    // mix of signal-like and null-like p-values so thresholds are non-trivial
    const double x = u(rng);
    p(j) = (u(rng) < 0.3) ? x * 1e-3 : x;
  }
  return p;
}

inline SimConfig small_config(Index m = 200, Index n = 100) {
  SimConfig c;
  c.m = m;
  c.n = n;
  return c;
}

}  // namespace adafat::test
