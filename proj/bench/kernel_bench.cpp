// Parallel kernels against the serial reference versions.
#include <random>

#include <benchmark/benchmark.h>

#include "aggbuf/graph/sbm.hpp"
#include "aggbuf/tensor/kernels.hpp"

namespace {

using aggbuf::Matrix;

Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (double& x : m.data()) x = n(rng);
  return m;
}

const aggbuf::CsrMatrix& sbm_adjacency() {
  static const aggbuf::CsrMatrix a = [] {
    aggbuf::SbmConfig cfg;
    cfg.n = 4000;
    cfg.p_in = 0.005;
    cfg.p_out = 0.0005;
    cfg.num_splits = 0;
    return aggbuf::normalize(aggbuf::generate_sbm(cfg).graph, {});
  }();
  return a;
}

void BM_matmul_parallel(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, 64, 2);
  for (auto _ : st) benchmark::DoNotOptimize(aggbuf::kernels::matmul(a, b));
}

void BM_matmul_reference(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, 64, 2);
  for (auto _ : st) benchmark::DoNotOptimize(aggbuf::kernels::reference::matmul(a, b));
}

void BM_spmm_parallel(benchmark::State& st) {
  const Matrix d = random_matrix(4000, static_cast<std::size_t>(st.range(0)), 3);
  for (auto _ : st) benchmark::DoNotOptimize(aggbuf::kernels::spmm(sbm_adjacency(), d));
}

void BM_spmm_reference(benchmark::State& st) {
  const Matrix d = random_matrix(4000, static_cast<std::size_t>(st.range(0)), 3);
  for (auto _ : st) benchmark::DoNotOptimize(aggbuf::kernels::reference::spmm(sbm_adjacency(), d));
}

}  // namespace

BENCHMARK(BM_matmul_parallel)->Arg(256)->Arg(1024);
BENCHMARK(BM_matmul_reference)->Arg(256)->Arg(1024);
BENCHMARK(BM_spmm_parallel)->Arg(16)->Arg(256);
BENCHMARK(BM_spmm_reference)->Arg(16)->Arg(256);

BENCHMARK_MAIN();
