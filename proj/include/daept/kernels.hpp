#pragma once

#include <cstddef>
#include <span>

// Dense kernels in two flavours: a plain serial reference and an OpenMP
// version. Both visit the reduction index in the same order for every output
// element, so their results are bit-identical; the serial path is what the
// tests compare against.
namespace daept::kernels {

struct GemmShape {
  std::size_t m;  // rows of the output
  std::size_t n;  // cols of the output
  std::size_t k;  // reduction length
};

enum class Op { None, Transpose };

namespace serial {

// c = op(a) * op(b). a, b, c are row-major; c is overwritten.
void gemm(GemmShape shape, std::span<const double> a, Op op_a,
          std::span<const double> b, Op op_b, std::span<double> c);

// out[j] = sum_i x[i, j]
void column_sums(std::size_t rows, std::size_t cols, std::span<const double> x,
                 std::span<double> out);

}  // namespace serial

namespace omp {

void gemm(GemmShape shape, std::span<const double> a, Op op_a,
          std::span<const double> b, Op op_b, std::span<double> c);

void column_sums(std::size_t rows, std::size_t cols, std::span<const double> x,
                 std::span<double> out);

}  // namespace omp

// Picks the OpenMP kernel once the work is large enough to amortise the team
// start-up; results do not depend on the choice.
void gemm(GemmShape shape, std::span<const double> a, Op op_a,
          std::span<const double> b, Op op_b, std::span<double> c);

void column_sums(std::size_t rows, std::size_t cols, std::span<const double> x,
                 std::span<double> out);

// Threads used by the OpenMP kernels on the calling thread.
void set_thread_count(int n);
int thread_count();

}  // namespace daept::kernels
