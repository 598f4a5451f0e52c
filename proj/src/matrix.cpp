#include "daept/matrix.hpp"

#include <cmath>
#include <string>

#include "daept/error.hpp"
#include "daept/kernels.hpp"

namespace daept {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                      shape_str(b));
  }
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Matrix out(a.rows(), a.cols());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = f(av[i], bv[i]);
  return out;
}

template <typename F>
Matrix map(const Matrix& m, F f) {
  Matrix out(m.rows(), m.cols());
  auto mv = m.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = f(mv[i]);
  return out;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ConfigError("Matrix: " + std::to_string(values_.size()) +
                      " values for shape " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ConfigError("Matrix: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ConfigError("matmul: " + shape_str(a) + " * " + shape_str(b));
  }
  Matrix c(a.rows(), b.cols());
  kernels::gemm({a.rows(), b.cols(), a.cols()}, a.values(), kernels::Op::None, b.values(),
                kernels::Op::None, c.values());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ConfigError("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  }
  Matrix c(a.cols(), b.cols());
  kernels::gemm({a.cols(), b.cols(), a.rows()}, a.values(), kernels::Op::Transpose,
                b.values(), kernels::Op::None, c.values());
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ConfigError("matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
  }
  Matrix c(a.rows(), b.rows());
  kernels::gemm({a.rows(), b.rows(), a.cols()}, a.values(), kernels::Op::None, b.values(),
                kernels::Op::Transpose, c.values());
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  }
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Matrix sub(const Matrix& a, const Matrix& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Matrix scale(const Matrix& m, double s) {
  return map(m, [s](double x) { return x * s; });
}

Matrix add_scalar(const Matrix& m, double s) {
  return map(m, [s](double x) { return x + s; });
}

Matrix add_row(const Matrix& m, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != m.cols()) {
    throw ConfigError("add_row: " + shape_str(m) + " + " + shape_str(row));
  }
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += row(0, j);
  }
  return out;
}

double sum(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v;
  return s;
}

double mean(const Matrix& m) {
  if (m.empty()) throw ConfigError("mean: empty matrix");
  return sum(m) / static_cast<double>(m.size());
}

Matrix column_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  kernels::column_sums(m.rows(), m.cols(), m.values(), out.values());
  return out;
}

Matrix column_means(const Matrix& m) {
  if (m.rows() == 0) throw ConfigError("column_means: no rows");
  return scale(column_sums(m), 1.0 / static_cast<double>(m.rows()));
}

Matrix column_variances(const Matrix& m) {
  const Matrix mu = column_means(m);
  Matrix out(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double d = m(i, j) - mu(0, j);
      out(0, j) += d * d;
    }
  }
  return scale(out, 1.0 / static_cast<double>(m.rows()));
}

Matrix column_means_masked(const Matrix& m, const std::vector<bool>& missing,
                           std::vector<std::size_t>* observed) {
  if (missing.size() != m.size()) throw ConfigError("column_means_masked: mask size");
  Matrix out(1, m.cols());
  std::vector<std::size_t> counts(m.cols(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (missing[i * m.cols() + j]) continue;
      out(0, j) += m(i, j);
      ++counts[j];
    }
  }
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (counts[j] > 0) out(0, j) /= static_cast<double>(counts[j]);
  }
  if (observed) *observed = std::move(counts);
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) throw ConfigError("select_rows: index out of range");
    auto src = m.row(rows[i]);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

bool all_finite(const Matrix& m) {
  for (double v : m.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_finite(const Matrix& m, std::string_view producer) {
  if (!all_finite(m)) {
    throw TrainingError("non-finite value produced by " + std::string(producer) + " (" +
                        shape_str(m) + ")");
  }
}

}  // namespace daept
