// Serial vs OpenMP kernels on shapes that occur in the models.

#include <benchmark/benchmark.h>

#include <vector>

#include "daept/kernels.hpp"
#include "daept/matrix.hpp"
#include "daept/rng.hpp"

namespace k = daept::kernels;

namespace {

struct Operands {
  std::vector<double> a, b, c;
};

Operands make_operands(std::size_t m, std::size_t n, std::size_t kk) {
  daept::RngStream rng(7, 0);
  Operands o;
  const daept::Matrix a = daept::rand_normal(rng, m, kk, 0.0, 1.0);
  const daept::Matrix b = daept::rand_normal(rng, kk, n, 0.0, 1.0);
  o.a.assign(a.values().begin(), a.values().end());
  o.b.assign(b.values().begin(), b.values().end());
  o.c.assign(m * n, 0.0);
  return o;
}

template <auto Gemm>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto kk = static_cast<std::size_t>(state.range(2));
  Operands o = make_operands(m, n, kk);
  for (auto _ : state) {
    Gemm(k::GemmShape{m, n, kk}, o.a, k::Op::None, o.b, k::Op::None, o.c);
    benchmark::DoNotOptimize(o.c.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * m * n * kk));
}

template <auto Sums>
void BM_ColumnSums(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  daept::RngStream rng(11, 0);
  const daept::Matrix x = daept::rand_normal(rng, rows, cols, 0.0, 1.0);
  std::vector<double> out(cols);
  for (auto _ : state) {
    Sums(rows, cols, x.values(), out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * rows * cols));
}

// batch x genes x code, batch x code x fc1, and a square case
void gemm_shapes(benchmark::internal::Benchmark* b) {
  b->Args({500, 128, 2000});
  b->Args({500, 64, 128});
  b->Args({512, 512, 512});
}

void sum_shapes(benchmark::internal::Benchmark* b) {
  b->Args({500, 2000});
  b->Args({4000, 128});
}

}  // namespace

BENCHMARK(BM_Gemm<k::serial::gemm>)->Name("gemm/serial")->Apply(gemm_shapes)->UseRealTime();
BENCHMARK(BM_Gemm<k::omp::gemm>)->Name("gemm/omp")->Apply(gemm_shapes)->UseRealTime();
BENCHMARK(BM_ColumnSums<k::serial::column_sums>)
    ->Name("column_sums/serial")->Apply(sum_shapes)->UseRealTime();
BENCHMARK(BM_ColumnSums<k::omp::column_sums>)
    ->Name("column_sums/omp")->Apply(sum_shapes)->UseRealTime();

BENCHMARK_MAIN();
