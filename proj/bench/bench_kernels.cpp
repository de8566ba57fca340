#include <random>

#include <benchmark/benchmark.h>

#include "adafat/adafat.hpp"
#include "adafat/kernels.hpp"
#include "adafat/simgen.hpp"

using namespace adafat;

namespace {

MatrixXd panel(Index n, Index m) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  MatrixXd A(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) A(i, j) = nd(rng);
  return A;
}

template <MatrixXd (*F)(const MatrixXd&)>
void BM_RowGram(benchmark::State& state) {
  const MatrixXd A = panel(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(F(A));
}

template <VectorXd (*F)(const MatrixXd&, const MatrixXd&, const MatrixXd&)>
void BM_ResidualSS(benchmark::State& state) {
  const MatrixXd A = panel(state.range(0), state.range(1));
  const MatrixXd L = panel(state.range(0), 3);
  const MatrixXd G = panel(3, state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(F(A, L, G));
}

void BM_FactorEstimate(benchmark::State& state) {
  SimConfig c;
  c.m = state.range(1);
  c.n = state.range(0);
  const SimDraw d = generate(c, 0);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_factors(d.data, FactorConfig{}));
}

void BM_AdaFat(benchmark::State& state) {
  SimConfig c;
  c.pi1 = 0.2;
  const SimDraw d = generate(c, 0);
  for (auto _ : state) benchmark::DoNotOptimize(adafat_run(d.data, TestingConfig{}));
}

}  // namespace

BENCHMARK(BM_RowGram<kernels::row_gram>)->Args({200, 500})->Args({400, 1000});
BENCHMARK(BM_RowGram<kernels::serial::row_gram>)->Args({200, 500})->Args({400, 1000});
BENCHMARK(BM_ResidualSS<kernels::residual_column_sum_squares>)->Args({200, 500})->Args({400, 1000});
BENCHMARK(BM_ResidualSS<kernels::serial::residual_column_sum_squares>)
    ->Args({200, 500})
    ->Args({400, 1000});
BENCHMARK(BM_FactorEstimate)->Args({200, 500})->Args({400, 1000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AdaFat)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
