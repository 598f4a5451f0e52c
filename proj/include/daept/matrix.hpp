#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace daept {

/// Dense row-major matrix of doubles. Samples are rows throughout the library.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// transpose(a) * b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * transpose(b)
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);
Matrix add_scalar(const Matrix& m, double s);
// Adds the 1 x cols row vector to every row of m.
Matrix add_row(const Matrix& m, const Matrix& row);

double sum(const Matrix& m);
double mean(const Matrix& m);
// 1 x cols results.
Matrix column_sums(const Matrix& m);
Matrix column_means(const Matrix& m);
// Biased (divide by rows) per-column variance.
Matrix column_variances(const Matrix& m);
// Mean over the entries whose mask slot is false. Columns with no observed
// entries get 0 and are reported through `observed`.
Matrix column_means_masked(const Matrix& m, const std::vector<bool>& missing,
                           std::vector<std::size_t>* observed = nullptr);

// Gathers the listed rows in order.
Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows);

bool all_finite(const Matrix& m);
// Throws TrainingError naming `producer` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view producer);

}  // namespace daept
