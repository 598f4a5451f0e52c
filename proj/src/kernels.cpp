#include "daept/kernels.hpp"

#include <omp.h>

namespace daept::kernels {

namespace {

constexpr std::size_t kParallelWork = std::size_t{1} << 15;

// Output row i of op(a) * op(b). Every c[i, j] starts at 0 and accumulates
// over p = 0..k-1 in ascending order regardless of which loop nest runs.
void gemm_row(GemmShape s, const double* a, Op op_a, const double* b, Op op_b,
              double* c, std::size_t i) {
  double* crow = c + i * s.n;
  for (std::size_t j = 0; j < s.n; ++j) crow[j] = 0.0;

  if (op_b == Op::None) {
    for (std::size_t p = 0; p < s.k; ++p) {
      const double aip = op_a == Op::None ? a[i * s.k + p] : a[p * s.m + i];
      const double* brow = b + p * s.n;
      for (std::size_t j = 0; j < s.n; ++j) crow[j] += aip * brow[j];
    }
    return;
  }

  for (std::size_t j = 0; j < s.n; ++j) {
    const double* brow = b + j * s.k;
    double acc = 0.0;
    if (op_a == Op::None) {
      const double* arow = a + i * s.k;
      for (std::size_t p = 0; p < s.k; ++p) acc += arow[p] * brow[p];
    } else {
      for (std::size_t p = 0; p < s.k; ++p) acc += a[p * s.m + i] * brow[p];
    }
    crow[j] = acc;
  }
}

void column_sum_range(std::size_t rows, std::size_t cols, const double* x, double* out,
                      std::size_t j0, std::size_t j1) {
  for (std::size_t j = j0; j < j1; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* xrow = x + i * cols;
    for (std::size_t j = j0; j < j1; ++j) out[j] += xrow[j];
  }
}

}  // namespace

namespace serial {

void gemm(GemmShape shape, std::span<const double> a, Op op_a, std::span<const double> b,
          Op op_b, std::span<double> c) {
  for (std::size_t i = 0; i < shape.m; ++i) {
    gemm_row(shape, a.data(), op_a, b.data(), op_b, c.data(), i);
  }
}

void column_sums(std::size_t rows, std::size_t cols, std::span<const double> x,
                 std::span<double> out) {
  column_sum_range(rows, cols, x.data(), out.data(), 0, cols);
}

}  // namespace serial

namespace omp {

void gemm(GemmShape shape, std::span<const double> a, Op op_a, std::span<const double> b,
          Op op_b, std::span<double> c) {
  const auto m = static_cast<std::ptrdiff_t>(shape.m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    gemm_row(shape, a.data(), op_a, b.data(), op_b, c.data(), static_cast<std::size_t>(i));
  }
}

void column_sums(std::size_t rows, std::size_t cols, std::span<const double> x,
                 std::span<double> out) {
  constexpr std::size_t kBlock = 64;
  const auto blocks = static_cast<std::ptrdiff_t>((cols + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t j0 = static_cast<std::size_t>(blk) * kBlock;
    const std::size_t j1 = j0 + kBlock < cols ? j0 + kBlock : cols;
    column_sum_range(rows, cols, x.data(), out.data(), j0, j1);
  }
}

}  // namespace omp

void gemm(GemmShape shape, std::span<const double> a, Op op_a, std::span<const double> b,
          Op op_b, std::span<double> c) {
  if (shape.m > 1 && shape.m * shape.n * shape.k >= kParallelWork && thread_count() > 1) {
    omp::gemm(shape, a, op_a, b, op_b, c);
  } else {
    serial::gemm(shape, a, op_a, b, op_b, c);
  }
}

void column_sums(std::size_t rows, std::size_t cols, std::span<const double> x,
                 std::span<double> out) {
  if (cols > 64 && rows * cols >= kParallelWork && thread_count() > 1) {
    omp::column_sums(rows, cols, x, out);
  } else {
    serial::column_sums(rows, cols, x, out);
  }
}

void set_thread_count(int n) { omp_set_num_threads(n < 1 ? 1 : n); }

int thread_count() { return omp_get_max_threads(); }

}  // namespace daept::kernels
