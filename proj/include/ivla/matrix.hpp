#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ivla/ledger.hpp"

namespace ivla {

// Dense row-major matrix of doubles. Zero-sized matrices are permitted as
// empty factor blocks (a delta of width 0); values read from files are always
// at least 1 x 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix zeros(std::size_t rows, std::size_t cols) {
    return Matrix(rows, cols);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t i) {
    return std::span<double>(data_).subspan(i * cols_, cols_);
  }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  Matrix column(std::size_t j) const;
  Matrix columns(std::size_t first, std::size_t count) const;

  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Kernels. Each charges `ledger` according to the convention documented on
// CostLedger and throws ShapeError on nonconforming operands.
Matrix mat_mul(const Matrix& a, const Matrix& b, CostLedger& ledger);
// a^T * b without materializing the transpose.
Matrix mat_mul_tn(const Matrix& a, const Matrix& b, CostLedger& ledger);
// c += a * b^T (fused accumulate, charged as the product only).
void mat_mul_nt_accumulate(Matrix& c, const Matrix& a, const Matrix& b,
                           CostLedger& ledger);
Matrix mat_add(const Matrix& a, const Matrix& b, CostLedger& ledger);
Matrix mat_sub(const Matrix& a, const Matrix& b, CostLedger& ledger);
void mat_add_inplace(Matrix& a, const Matrix& b, CostLedger& ledger);
Matrix mat_scale(double lambda, const Matrix& a, CostLedger& ledger);
Matrix mat_transpose(const Matrix& a);
// LU with partial pivoting. Throws SingularityError when a pivot falls below
// pivot_tolerance(a).
Matrix mat_inverse(const Matrix& a, CostLedger& ledger);
// [a | b | ...] side by side; rows must agree. Free.
Matrix hcat(std::span<const Matrix> blocks);
Matrix hcat(const Matrix& a, const Matrix& b);

// 1e-12 * max |a_ij|.
double pivot_tolerance(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
// ||a - b||_F / max(||b||_F, floor).
double relative_error(const Matrix& a, const Matrix& b, double floor = 1.0);

// Text form: "rows cols" then one line per row. Binary form: u64 rows, u64
// cols (little-endian), then rows*cols little-endian f64.
Matrix read_matrix_text(std::istream& in);
void write_matrix_text(std::ostream& out, const Matrix& m);
Matrix read_matrix_binary(std::istream& in);
void write_matrix_binary(std::ostream& out, const Matrix& m);
Matrix load_matrix(const std::string& path);
void save_matrix(const std::string& path, const Matrix& m);

std::ostream& operator<<(std::ostream& out, const Matrix& m);

}  // namespace ivla
