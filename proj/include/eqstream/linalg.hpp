#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eqstream/rng.hpp"

namespace eqstream {

namespace detail {
inline void require_finite(const std::vector<double>& values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string(what) + ": non-finite value on construction");
}
}  // namespace detail

/// Dense 64-bit vector. The validated constructors reject non-finite values;
/// arithmetic results are unchecked so that solvers can observe overflow and
/// raise their own divergence errors.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n) : values_(n, 0.0) {}
  Vector(std::initializer_list<double> init) : values_(init) {
    detail::require_finite(values_, "Vector");
  }

  static Vector zeros(std::size_t n) { return Vector(n); }

  static Vector from(std::vector<double> values) {
    detail::require_finite(values, "Vector");
    Vector v;
    v.values_ = std::move(values);
    return v;
  }

  /// Construction path for computed results; skips the finiteness check.
  static Vector raw(std::vector<double> values) {
    Vector v;
    v.values_ = std::move(values);
    return v;
  }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& data() const { return values_; }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  Vector& operator+=(const Vector& rhs) {
    check_same_size(rhs, "+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += rhs.values_[i];
    return *this;
  }
  Vector& operator-=(const Vector& rhs) {
    check_same_size(rhs, "-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= rhs.values_[i];
    return *this;
  }
  Vector& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend Vector operator+(Vector lhs, const Vector& rhs) { return lhs += rhs; }
  friend Vector operator-(Vector lhs, const Vector& rhs) { return lhs -= rhs; }
  friend Vector operator*(double s, Vector v) { return v *= s; }

  friend bool operator==(const Vector& a, const Vector& b) { return a.values_ == b.values_; }

 private:
  void check_same_size(const Vector& rhs, const char* op) const {
    if (values_.size() != rhs.values_.size())
      throw std::invalid_argument(std::string("Vector ") + op + ": length " +
                                  std::to_string(values_.size()) + " vs " +
                                  std::to_string(rhs.values_.size()));
  }
  std::vector<double> values_;
};

/// Dense row-major matrix, 64-bit throughout. Row-major order is part of the
/// serialization contract and must not change.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (values.size() != rows * cols)
      throw std::invalid_argument("Matrix: " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + " needs " +
                                  std::to_string(rows * cols) + " values, got " +
                                  std::to_string(values.size()));
    detail::require_finite(values, "Matrix");
    Matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.values_ = std::move(values);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  const std::vector<double>& data() const { return values_; }

  void scale(double s) {
    for (double& v : values_) v *= s;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols() != v.size())
    throw std::invalid_argument("matvec: " + shape_string(m) +
                                " matrix applied to length-" + std::to_string(v.size()) +
                                " vector");
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * v[j];
    out[i] = acc;
  }
  return Vector::raw(std::move(out));
}

inline Vector matvec_transpose(const Matrix& m, const Vector& v) {
  if (m.rows() != v.size())
    throw std::invalid_argument("matvec_transpose: " + shape_string(m) +
                                " matrix applied to length-" + std::to_string(v.size()) +
                                " vector");
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j) * v[i];
  return Vector::raw(std::move(out));
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dot: length " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double sq_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("sq_distance: length " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

inline double l2_norm(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

/// Largest-singular-value estimate by power iteration on A'A, started from a
/// seeded random direction so repeated calls are reproducible. Returns 0 for
/// the zero matrix. The estimate converges from below; for matrices with a
/// spectral gap it is exact to machine precision long before 100 iterations.
inline double spectral_norm_estimate(const Matrix& m, std::size_t iters = 100,
                                     std::uint64_t seed = 0) {
  if (iters == 0) throw std::invalid_argument("spectral_norm_estimate: iters must be >= 1");
  Rng rng(mix_seed(seed, 0x5350454354ULL));
  Vector v = Vector::raw(rng.normals(m.cols()));
  const double nv = l2_norm(v);
  if (nv == 0.0) return 0.0;
  v *= 1.0 / nv;
  double sigma = 0.0;
  for (std::size_t k = 0; k < iters; ++k) {
    Vector w = matvec(m, v);
    sigma = l2_norm(w);
    if (sigma == 0.0) return 0.0;
    w *= 1.0 / sigma;
    Vector s = matvec_transpose(m, w);
    const double ns = l2_norm(s);
    if (ns == 0.0) return sigma;
    s *= 1.0 / ns;
    v = std::move(s);
  }
  return l2_norm(matvec(m, v));
}

/// Matrix with Haar-random orthonormal columns (rows >= cols): Householder
/// QR of a fresh Gaussian draw with the R-diagonal sign fix. Such maps treat
/// every direction equally, which makes them the right base for state maps
/// with a prescribed contraction rate and for isotropic input injections; a
/// spectrally rescaled Gaussian would have spectral radius around half its
/// spectral norm and singular values spread over a wide band.
inline Matrix random_orthonormal(Rng& rng, std::size_t rows, std::size_t cols) {
  if (cols == 0 || rows < cols)
    throw std::invalid_argument("random_orthonormal: need rows >= cols >= 1");
  Matrix g = Matrix::from(rows, cols, rng.normals(rows * cols));
  Matrix q = Matrix::identity(rows);
  std::vector<double> v(rows, 0.0);
  for (std::size_t k = 0; k < cols && k + 1 < rows; ++k) {
    double col_norm_sq = 0.0;
    for (std::size_t i = k; i < rows; ++i) col_norm_sq += g(i, k) * g(i, k);
    const double col_norm = std::sqrt(col_norm_sq);
    if (col_norm == 0.0) continue;
    const double alpha = g(k, k) >= 0.0 ? -col_norm : col_norm;
    v[k] = g(k, k) - alpha;
    for (std::size_t i = k + 1; i < rows; ++i) v[i] = g(i, k);
    double v_norm_sq = 0.0;
    for (std::size_t i = k; i < rows; ++i) v_norm_sq += v[i] * v[i];
    if (v_norm_sq == 0.0) continue;
    const double beta = 2.0 / v_norm_sq;
    for (std::size_t j = k; j < cols; ++j) {
      double c = 0.0;
      for (std::size_t i = k; i < rows; ++i) c += v[i] * g(i, j);
      c *= beta;
      for (std::size_t i = k; i < rows; ++i) g(i, j) -= c * v[i];
    }
    for (std::size_t r = 0; r < rows; ++r) {
      double c = 0.0;
      for (std::size_t j = k; j < rows; ++j) c += q(r, j) * v[j];
      c *= beta;
      for (std::size_t j = k; j < rows; ++j) q(r, j) -= c * v[j];
    }
  }
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < cols; ++k) {
    const double sign = (k < rows && g(k, k) < 0.0) ? -1.0 : 1.0;
    for (std::size_t r = 0; r < rows; ++r) out(r, k) = sign * q(r, k);
  }
  return out;
}

/// Square Haar-random orthogonal matrix.
inline Matrix random_orthogonal(Rng& rng, std::size_t n) {
  return random_orthonormal(rng, n, n);
}

/// Solves a x = rhs by LU factorization with partial pivoting. Small dense
/// systems only; used by the closed-form fixed-point oracle.
inline Vector solve_linear(Matrix a, Vector rhs) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("solve_linear: matrix must be square, got " +
                                shape_string(a));
  if (a.rows() != rhs.size())
    throw std::invalid_argument("solve_linear: " + shape_string(a) +
                                " system with length-" + std::to_string(rhs.size()) +
                                " right-hand side");
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::fabs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double cand = std::fabs(a(r, col));
      if (cand > best) {
        best = cand;
        pivot = r;
      }
    }
    if (best == 0.0) throw std::runtime_error("solve_linear: singular matrix");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(rhs[col], rhs[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a(r, col) / a(col, col);
      if (factor == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= factor * a(col, j);
      rhs[r] -= factor * rhs[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double acc = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= a(i, j) * x[j];
    x[i] = acc / a(i, i);
  }
  return Vector::raw(std::move(x));
}

}  // namespace eqstream
