// Serial reference vs OpenMP kernels at the sizes the trainer and the
// spectral metric actually hit. Run with OMP_NUM_THREADS=<n>.

#include <benchmark/benchmark.h>

#include <vector>

#include "gmvae/kernels.hpp"
#include "gmvae/rng.hpp"

namespace {

std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
  gmvae::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// batch x 3072 input layer times 3072 x 512 weights
template <void (*Fn)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t,
                     bool)>
void BM_MatmulNN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 3072, n = 512;
  const auto a = random_buffer(m * k, 1), b = random_buffer(k * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    Fn(a.data(), b.data(), c.data(), m, k, n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k * n));
}

// weight gradient: X^T dY with X batch x 3072, dY batch x 512
template <void (*Fn)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t,
                     bool)>
void BM_MatmulTN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 3072, n = 512;
  const auto a = random_buffer(m * k, 3), b = random_buffer(m * n, 4);
  std::vector<double> c(k * n);
  for (auto _ : state) {
    Fn(a.data(), b.data(), c.data(), m, k, n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k * n));
}

template <void (*Fn)(const double*, double*, std::size_t, std::size_t)>
void BM_PairwiseDist(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_buffer(n * 2, 5);
  std::vector<double> d(n * n);
  for (auto _ : state) {
    Fn(x.data(), d.data(), n, 2);
    benchmark::DoNotOptimize(d.data());
  }
}

}  // namespace

BENCHMARK(BM_MatmulNN<gmvae::kernels::serial::matmul_nn>)->Arg(32)->Arg(256);
BENCHMARK(BM_MatmulNN<gmvae::kernels::parallel::matmul_nn>)->Arg(32)->Arg(256);
BENCHMARK(BM_MatmulTN<gmvae::kernels::serial::matmul_tn>)->Arg(32)->Arg(256);
BENCHMARK(BM_MatmulTN<gmvae::kernels::parallel::matmul_tn>)->Arg(32)->Arg(256);
BENCHMARK(BM_PairwiseDist<gmvae::kernels::serial::pairwise_sq_dist>)->Arg(256)->Arg(2048);
BENCHMARK(BM_PairwiseDist<gmvae::kernels::parallel::pairwise_sq_dist>)->Arg(256)->Arg(2048);

BENCHMARK_MAIN();
