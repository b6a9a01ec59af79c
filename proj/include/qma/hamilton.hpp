#pragma once
/// @file hamilton.hpp
/// Quaternions, quaternionic matrices, the conjugate embedding into complex
/// matrices, hyperhermitian matrices, the Moore determinant and mixed
/// discriminants.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qma/errors.hpp"
#include "qma/rational.hpp"

namespace qma {

/// q = x0 + x1 i + x2 j + x3 k over a scalar ring T.
template <class T>
struct Quaternion {
  T x0{0}, x1{0}, x2{0}, x3{0};

  Quaternion() = default;
  Quaternion(T a) : x0(std::move(a)) {}
  Quaternion(T a, T b, T c, T d)
      : x0(std::move(a)), x1(std::move(b)), x2(std::move(c)), x3(std::move(d)) {}

  static Quaternion i() { return {T(0), T(1), T(0), T(0)}; }
  static Quaternion j() { return {T(0), T(0), T(1), T(0)}; }
  static Quaternion k() { return {T(0), T(0), T(0), T(1)}; }

  Quaternion conj() const { return {x0, T(-x1), T(-x2), T(-x3)}; }
  T norm2() const { return T(x0 * x0 + x1 * x1 + x2 * x2 + x3 * x3); }

  Quaternion& operator+=(const Quaternion& o) {
    x0 += o.x0;
    x1 += o.x1;
    x2 += o.x2;
    x3 += o.x3;
    return *this;
  }
  Quaternion& operator-=(const Quaternion& o) {
    x0 -= o.x0;
    x1 -= o.x1;
    x2 -= o.x2;
    x3 -= o.x3;
    return *this;
  }

  friend Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
  friend Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
  friend Quaternion operator-(const Quaternion& a) { return {T(-a.x0), T(-a.x1), T(-a.x2), T(-a.x3)}; }

  // Hamilton product
  friend Quaternion operator*(const Quaternion& a, const Quaternion& b) {
    return {T(a.x0 * b.x0 - a.x1 * b.x1 - a.x2 * b.x2 - a.x3 * b.x3),
            T(a.x0 * b.x1 + a.x1 * b.x0 + a.x2 * b.x3 - a.x3 * b.x2),
            T(a.x0 * b.x2 - a.x1 * b.x3 + a.x2 * b.x0 + a.x3 * b.x1),
            T(a.x0 * b.x3 + a.x1 * b.x2 - a.x2 * b.x1 + a.x3 * b.x0)};
  }
  Quaternion& operator*=(const Quaternion& o) { return *this = *this * o; }

  friend Quaternion operator*(const Quaternion& a, const T& s) {
    return {T(a.x0 * s), T(a.x1 * s), T(a.x2 * s), T(a.x3 * s)};
  }
  friend Quaternion operator*(const T& s, const Quaternion& a) { return a * s; }

  friend bool operator==(const Quaternion& a, const Quaternion& b) {
    return a.x0 == b.x0 && a.x1 == b.x1 && a.x2 == b.x2 && a.x3 == b.x3;
  }
};

using Quat = Quaternion<double>;

inline Quat quat_mul(const Quat& a, const Quat& b) { return a * b; }

inline double max_abs_diff(const Quat& a, const Quat& b) {
  return std::max({std::abs(a.x0 - b.x0), std::abs(a.x1 - b.x1), std::abs(a.x2 - b.x2),
                   std::abs(a.x3 - b.x3)});
}

/// Dense l x m quaternionic matrix, row-major.
template <class T>
class QMatrix {
public:
  QMatrix() = default;
  QMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols) {
    if (rows < 0 || cols < 0) throw dimension_error("QMatrix: negative dimension");
  }

  static QMatrix identity(int n) {
    QMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = Quaternion<T>(T(1));
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Quaternion<T>& operator()(int r, int c) { return data_[std::size_t(r) * cols_ + c]; }
  const Quaternion<T>& operator()(int r, int c) const { return data_[std::size_t(r) * cols_ + c]; }

  /// Entrywise conjugate of the transpose.
  QMatrix adjoint() const {
    QMatrix m(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c) m(c, r) = (*this)(r, c).conj();
    return m;
  }

  friend QMatrix operator*(const QMatrix& a, const QMatrix& b) {
    if (a.cols_ != b.rows_) throw dimension_error("QMatrix product: inner dimensions differ");
    QMatrix m(a.rows_, b.cols_);
    for (int r = 0; r < a.rows_; ++r)
      for (int c = 0; c < b.cols_; ++c) {
        Quaternion<T> s;
        for (int k = 0; k < a.cols_; ++k) s += a(r, k) * b(k, c);
        m(r, c) = s;
      }
    return m;
  }
  friend QMatrix operator+(const QMatrix& a, const QMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw dimension_error("QMatrix sum: shape mismatch");
    QMatrix m = a;
    for (std::size_t i = 0; i < m.data_.size(); ++i) m.data_[i] += b.data_[i];
    return m;
  }
  friend QMatrix operator*(const T& s, const QMatrix& a) {
    QMatrix m = a;
    for (auto& q : m.data_) q = q * s;
    return m;
  }
  friend bool operator==(const QMatrix& a, const QMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Quaternion<T>> data_;
};

using QMat = QMatrix<double>;

/// The 2x2 complex block [[x0 - i x1, -x2 + i x3], [x2 + i x3, x0 + i x1]].
inline Eigen::Matrix2cd tau(const Quat& q) {
  using cd = std::complex<double>;
  Eigen::Matrix2cd m;
  m << cd(q.x0, -q.x1), cd(-q.x2, q.x3), cd(q.x2, q.x3), cd(q.x0, q.x1);
  return m;
}

/// Blockwise embedding of an l x m quaternionic matrix into C^{2l x 2m}.
inline Eigen::MatrixXcd tau(const QMat& a) {
  Eigen::MatrixXcd m(2 * a.rows(), 2 * a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) m.block<2, 2>(2 * r, 2 * c) = tau(a(r, c));
  return m;
}

/// Block-diagonal J with blocks [[0, 1], [-1, 0]].
inline Eigen::MatrixXcd symplectic_j(int n) {
  Eigen::MatrixXcd j = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  for (int l = 0; l < n; ++l) {
    j(2 * l, 2 * l + 1) = 1.0;
    j(2 * l + 1, 2 * l) = -1.0;
  }
  return j;
}

namespace detail {

template <class T>
bool is_exact_zero(const T& v) {
  if constexpr (std::is_floating_point_v<T>)
    return v == 0;
  else
    return sgn(v) == 0;
}

template <class T>
double to_double(const T& v) {
  if constexpr (std::is_floating_point_v<T>)
    return v;
  else
    return v.get_d();
}

} // namespace detail

/// Square quaternionic matrix with A(k,j) = conj(A(j,k)).
template <class T>
class HyperhermitianMatrix {
public:
  HyperhermitianMatrix() = default;

  /// Validates the hyperhermitian property (exactly for rationals, to `tol` for doubles).
  explicit HyperhermitianMatrix(QMatrix<T> a, double tol = 1e-12) : a_(std::move(a)) {
    if (a_.rows() != a_.cols()) throw dimension_error("hyperhermitian matrix must be square");
    for (int r = 0; r < a_.rows(); ++r)
      for (int c = r; c < a_.cols(); ++c) {
        if constexpr (std::is_floating_point_v<T>) {
          if (max_abs_diff(a_(r, c), a_(c, r).conj()) > tol)
            throw precondition_error("matrix is not hyperhermitian");
        } else {
          Quaternion<T> d = a_(r, c) - a_(c, r).conj();
          if (!(detail::is_exact_zero(d.x0) && detail::is_exact_zero(d.x1) &&
                detail::is_exact_zero(d.x2) && detail::is_exact_zero(d.x3)))
            throw precondition_error("matrix is not hyperhermitian");
        }
      }
  }

  static HyperhermitianMatrix identity(int n) { return HyperhermitianMatrix(QMatrix<T>::identity(n)); }

  int n() const { return a_.rows(); }
  const QMatrix<T>& matrix() const { return a_; }
  const Quaternion<T>& operator()(int r, int c) const { return a_(r, c); }

  friend HyperhermitianMatrix operator+(const HyperhermitianMatrix& a, const HyperhermitianMatrix& b) {
    HyperhermitianMatrix s;
    s.a_ = a.a_ + b.a_;
    return s;
  }
  friend HyperhermitianMatrix operator*(const T& s, const HyperhermitianMatrix& a) {
    HyperhermitianMatrix m;
    m.a_ = s * a.a_;
    return m;
  }

private:
  QMatrix<T> a_;
};

using HMat = HyperhermitianMatrix<double>;

inline constexpr int max_algebra_dim = 8;

/// Moore determinant by cycle expansion: each cycle starts at its smallest
/// element, cycles are multiplied in order of decreasing leader.
template <class T>
T moore_det(const HyperhermitianMatrix<T>& a) {
  const int n = a.n();
  if (n > max_algebra_dim) throw dimension_error("moore_det: n exceeds 8");
  if (n == 0) return T(1);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  T total(0);
  std::vector<char> seen(n);
  std::vector<int> leaders;
  do {
    std::fill(seen.begin(), seen.end(), 0);
    leaders.clear();
    for (int i = 0; i < n; ++i) {
      if (seen[i]) continue;
      leaders.push_back(i);
      for (int c = i; !seen[c]; c = perm[c]) seen[c] = 1;
    }
    Quaternion<T> prod(T(1));
    for (auto it = leaders.rbegin(); it != leaders.rend(); ++it) {
      int c = *it;
      do {
        prod = prod * a(c, perm[c]);
        c = perm[c];
      } while (c != *it);
    }
    const bool odd = (n - static_cast<int>(leaders.size())) % 2 != 0;
    if (odd)
      total -= prod.x0;
    else
      total += prod.x0;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

/// Full polarization of the Moore determinant.
template <class T>
T mixed_discriminant(const std::vector<HyperhermitianMatrix<T>>& slots) {
  if (slots.empty()) throw dimension_error("mixed_discriminant: no slots");
  const int n = slots.front().n();
  if (static_cast<int>(slots.size()) != n)
    throw dimension_error("mixed_discriminant: need exactly n slots");
  for (const auto& s : slots)
    if (s.n() != n) throw dimension_error("mixed_discriminant: slot dimensions differ");
  if (n > max_algebra_dim) throw dimension_error("mixed_discriminant: n exceeds 8");

  T total(0);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    HyperhermitianMatrix<T> sum = T(0) * slots.front();
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) sum = sum + slots[i];
    const int size = std::popcount(mask);
    T d = moore_det(sum);
    if ((n - size) % 2 != 0)
      total -= d;
    else
      total += d;
  }
  T fact(1);
  for (int i = 2; i <= n; ++i) fact *= T(i);
  return T(total / fact);
}

// ---- random generation -------------------------------------------------------

inline Quat random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return {g(rng), g(rng), g(rng), g(rng)};
}

inline QMat random_qmatrix(int rows, int cols, std::mt19937_64& rng) {
  QMat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = random_quaternion(rng);
  return m;
}

/// Quaternionic unitary matrix (adjoint(A) A = I) from Gram-Schmidt on random columns.
inline QMat random_unitary(int n, std::mt19937_64& rng) {
  QMat a = random_qmatrix(n, n, rng);
  for (int c = 0; c < n; ++c) {
    for (int p = 0; p < c; ++p) {
      Quat ip;  // <e_p, v> = sum conj(e_p) v
      for (int r = 0; r < n; ++r) ip += a(r, p).conj() * a(r, c);
      for (int r = 0; r < n; ++r) a(r, c) -= a(r, p) * ip;
    }
    double nrm = 0;
    for (int r = 0; r < n; ++r) nrm += a(r, c).norm2();
    nrm = std::sqrt(nrm);
    for (int r = 0; r < n; ++r) a(r, c) = a(r, c) * (1.0 / nrm);
  }
  return a;
}

/// (B + B^*)/2 for a Gaussian B.
inline HMat random_hyperhermitian(int n, std::mt19937_64& rng) {
  QMat b = random_qmatrix(n, n, rng);
  QMat s = 0.5 * (b + b.adjoint());
  return HMat(s);
}

/// B B^* + shift I, positive semidefinite for shift >= 0.
inline HMat random_psd_hyperhermitian(int n, std::mt19937_64& rng, double shift = 0.0) {
  QMat b = random_qmatrix(n, n, rng);
  QMat s = b * b.adjoint();
  for (int i = 0; i < n; ++i) s(i, i).x0 += shift;
  for (int r = 0; r < n; ++r) {
    s(r, r) = Quat(s(r, r).x0);
    for (int c = r + 1; c < n; ++c) s(c, r) = s(r, c).conj();
  }
  return HMat(s);
}

/// Real 4n x 4n matrix of x -> A x under q_j = x_{4j} + x_{4j+1} i + x_{4j+2} j + x_{4j+3} k.
inline Eigen::MatrixXd real_matrix(const QMat& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4 * a.rows(), 4 * a.cols());
  const Quat basis[4] = {Quat(1.0), Quat::i(), Quat::j(), Quat::k()};
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c)
      for (int b = 0; b < 4; ++b) {
        Quat v = a(r, c) * basis[b];
        m(4 * r + 0, 4 * c + b) = v.x0;
        m(4 * r + 1, 4 * c + b) = v.x1;
        m(4 * r + 2, 4 * c + b) = v.x2;
        m(4 * r + 3, 4 * c + b) = v.x3;
      }
  return m;
}

} // namespace qma
