// Serial references against the OpenMP kernels, plus the brute-force oracle.

#include <benchmark/benchmark.h>

#include <random>

#include "cdnroute/kernels.h"
#include "cdnroute/seq_solvers.h"

using namespace cdnroute;

namespace {

struct Pricing {
  CostMatrix cost;
  std::vector<Cost> u;
  std::vector<Cost> v;
  Matrix<std::uint8_t> basic;
  CostMatrix out;
};

Pricing make_pricing(int n) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<Cost> c(1, 100);
  Pricing p{CostMatrix(n, n), std::vector<Cost>(n), std::vector<Cost>(n),
            Matrix<std::uint8_t>(n, n), CostMatrix(n, n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) p.cost(i, j) = c(rng);
    p.u[i] = c(rng) / 2;
    p.v[i] = c(rng) / 2;
    p.basic(i, i) = 1;
  }
  return p;
}

void BM_ReducedCostsSerial(benchmark::State& state) {
  Pricing p = make_pricing(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    kernels::reduced_cost_matrix_serial(p.cost, p.u, p.v, p.out);
    benchmark::DoNotOptimize(p.out(0, 0));
  }
}

void BM_ReducedCostsParallel(benchmark::State& state) {
  Pricing p = make_pricing(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    kernels::reduced_cost_matrix_parallel(p.cost, p.u, p.v, p.out);
    benchmark::DoNotOptimize(p.out(0, 0));
  }
}

void BM_MostNegativeSerial(benchmark::State& state) {
  const Pricing p = make_pricing(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::most_negative_serial(p.cost, p.u, p.v, p.basic));
  }
}

void BM_MostNegativeParallel(benchmark::State& state) {
  const Pricing p = make_pricing(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::most_negative_parallel(p.cost, p.u, p.v, p.basic));
  }
}

TpInstance oracle_instance() {
  return make_tp({4, 6, 3, 7, 5}, {5, 5, 5, 5, 5},
                 CostMatrix{{4, 8, 1, 9, 3},
                            {2, 7, 6, 5, 8},
                            {9, 1, 4, 3, 2},
                            {6, 5, 3, 8, 7},
                            {1, 9, 8, 2, 6}});
}

void BM_BruteForceSerial(benchmark::State& state) {
  const TpInstance inst = oracle_instance();
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_optimum_serial(inst));
}

void BM_BruteForceParallel(benchmark::State& state) {
  const TpInstance inst = oracle_instance();
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_optimum(inst));
}

}  // namespace

BENCHMARK(BM_ReducedCostsSerial)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(BM_ReducedCostsParallel)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(BM_MostNegativeSerial)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(BM_MostNegativeParallel)->Arg(128)->Arg(512)->Arg(1024);
BENCHMARK(BM_BruteForceSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BruteForceParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
