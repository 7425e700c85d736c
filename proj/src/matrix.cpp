#include "ivla/matrix.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ivla/error.hpp"

namespace ivla {

namespace {

void require_finite(const Matrix& m, const char* op) {
  for (double x : m.data()) {
    if (!std::isfinite(x)) {
      throw NumericalError(std::string(op) + " produced a non-finite entry");
    }
  }
}

[[noreturn]] void shape_mismatch(const char* op, const Matrix& a,
                                 const Matrix& b) {
  throw ShapeError(std::string(op) + ": operand shapes " + a.shape_string() +
                   " and " + b.shape_string() + " do not conform");
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch(op, a, b);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::size_t j) const { return columns(j, 1); }

Matrix Matrix::columns(std::size_t first, std::size_t count) const {
  if (first + count > cols_) {
    throw ShapeError("column range out of bounds for " + shape_string());
  }
  Matrix out(rows_, count);
  for (std::size_t i = 0; i < rows_; ++i) {
    std::copy_n(data_.begin() + i * cols_ + first, count,
                out.data_.begin() + i * count);
  }
  return out;
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix mat_mul(const Matrix& a, const Matrix& b, CostLedger& ledger) {
  if (a.cols() != b.rows()) shape_mismatch("mat_mul", a, b);
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  Matrix c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.row(i).data();
    const double* ai = a.row(i).data();
    for (std::size_t l = 0; l < inner; ++l) {
      const double s = ai[l];
      const double* bl = b.row(l).data();
      for (std::size_t j = 0; j < m; ++j) ci[j] += s * bl[j];
    }
  }
  ledger.charge_mul_adds(static_cast<std::uint64_t>(n) * inner * m);
  require_finite(c, "mat_mul");
  return c;
}

Matrix mat_mul_tn(const Matrix& a, const Matrix& b, CostLedger& ledger) {
  if (a.rows() != b.rows()) shape_mismatch("mat_mul_tn", a, b);
  const std::size_t n = a.cols(), inner = a.rows(), m = b.cols();
  Matrix c(n, m);
  for (std::size_t l = 0; l < inner; ++l) {
    const double* al = a.row(l).data();
    const double* bl = b.row(l).data();
    for (std::size_t i = 0; i < n; ++i) {
      const double s = al[i];
      double* ci = c.row(i).data();
      for (std::size_t j = 0; j < m; ++j) ci[j] += s * bl[j];
    }
  }
  ledger.charge_mul_adds(static_cast<std::uint64_t>(n) * inner * m);
  require_finite(c, "mat_mul_tn");
  return c;
}

void mat_mul_nt_accumulate(Matrix& c, const Matrix& a, const Matrix& b,
                           CostLedger& ledger) {
  if (a.cols() != b.cols()) shape_mismatch("mat_mul_nt_accumulate", a, b);
  if (c.rows() != a.rows() || c.cols() != b.rows()) {
    shape_mismatch("mat_mul_nt_accumulate", c, a);
  }
  const std::size_t n = a.rows(), inner = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.row(i).data();
    double* ci = c.row(i).data();
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
      for (std::size_t l = 0; l < inner; ++l) s += ai[l] * bj[l];
      ci[j] += s;
    }
  }
  ledger.charge_mul_adds(static_cast<std::uint64_t>(n) * inner * m);
  require_finite(c, "mat_mul_nt_accumulate");
}

Matrix mat_add(const Matrix& a, const Matrix& b, CostLedger& ledger) {
  Matrix c = a;
  mat_add_inplace(c, b, ledger);
  return c;
}

void mat_add_inplace(Matrix& a, const Matrix& b, CostLedger& ledger) {
  require_same_shape("mat_add", a, b);
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
  ledger.charge_adds(a.size());
  require_finite(a, "mat_add");
}

Matrix mat_sub(const Matrix& a, const Matrix& b, CostLedger& ledger) {
  require_same_shape("mat_sub", a, b);
  Matrix c = a;
  auto x = c.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= y[i];
  ledger.charge_adds(c.size());
  require_finite(c, "mat_sub");
  return c;
}

Matrix mat_scale(double lambda, const Matrix& a, CostLedger& ledger) {
  Matrix c = a;
  for (double& x : c.data()) x *= lambda;
  ledger.charge_mul_adds(c.size());
  require_finite(c, "mat_scale");
  return c;
}

Matrix mat_transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

Matrix mat_inverse(const Matrix& a, CostLedger& ledger) {
  if (a.rows() != a.cols()) {
    throw ShapeError("mat_inverse: operand " + a.shape_string() +
                     " is not square");
  }
  const std::size_t n = a.rows();
  const double eps = pivot_tolerance(a);
  Matrix lu = a;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu(i, k)) > best) {
        best = std::abs(lu(i, k));
        p = i;
      }
    }
    if (!(best > eps)) {
      throw SingularityError("mat_inverse: pivot " + std::to_string(k) +
                                 " below tolerance (matrix is singular or "
                                 "ill-conditioned)",
                             k);
    }
    if (p != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(p).begin());
      std::swap(perm[k], perm[p]);
    }
    const double pivot = lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / pivot;
      lu(i, k) = f;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }

  // Solve L U x = P e_j for every column j.
  Matrix inv(n, n);
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) x[i] = perm[i] == j ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (std::size_t l = 0; l < i; ++l) s -= lu(i, l) * x[l];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t l = i + 1; l < n; ++l) s -= lu(i, l) * x[l];
      x[i] = s / lu(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = x[i];
  }
  ledger.charge_mul_adds(static_cast<std::uint64_t>(n) * n * n);
  require_finite(inv, "mat_inverse");
  return inv;
}

Matrix hcat(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t rows = blocks.front().rows();
  std::size_t cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) shape_mismatch("hcat", blocks.front(), b);
    cols += b.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    auto dst = out.row(i).begin();
    for (const auto& b : blocks) dst = std::copy(b.row(i).begin(), b.row(i).end(), dst);
  }
  return out;
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  const Matrix blocks[] = {a, b};
  return hcat(blocks);
}

double pivot_tolerance(const Matrix& a) { return 1e-12 * max_abs(a); }

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape("max_abs_diff", a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

double relative_error(const Matrix& a, const Matrix& b, double floor) {
  require_same_shape("relative_error", a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return std::sqrt(s) / std::max(frobenius_norm(b), floor);
}

Matrix read_matrix_text(std::istream& in) {
  std::size_t rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows == 0 || cols == 0) {
    throw DataError("matrix text: expected positive 'rows cols' header");
  }
  std::vector<double> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(in >> data[i])) {
      throw DataError("matrix text: expected " + std::to_string(data.size()) +
                      " entries, got " + std::to_string(i));
    }
  }
  return Matrix(rows, cols, std::move(data));
}

void write_matrix_text(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << m(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

namespace {

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw DataError("matrix binary: truncated input");
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

}  // namespace

Matrix read_matrix_binary(std::istream& in) {
  const std::uint64_t rows = read_u64_le(in);
  const std::uint64_t cols = read_u64_le(in);
  if (rows == 0 || cols == 0) throw DataError("matrix binary: empty shape");
  std::vector<double> data(rows * cols);
  for (double& x : data) x = std::bit_cast<double>(read_u64_le(in));
  return Matrix(rows, cols, std::move(data));
}

void write_matrix_binary(std::ostream& out, const Matrix& m) {
  write_u64_le(out, m.rows());
  write_u64_le(out, m.cols());
  for (double x : m.data()) write_u64_le(out, std::bit_cast<std::uint64_t>(x));
}

namespace {
bool is_binary_path(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
}
}  // namespace

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return is_binary_path(path) ? read_matrix_binary(in) : read_matrix_text(in);
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  if (is_binary_path(path)) {
    write_matrix_binary(out, m);
  } else {
    write_matrix_text(out, m);
  }
}

std::ostream& operator<<(std::ostream& out, const Matrix& m) {
  write_matrix_text(out, m);
  return out;
}

}  // namespace ivla
