#pragma once
/// @file monge_ampere.hpp
/// The quaternionic Monge-Ampere operator, its mixed version, the
/// hyperhermitian Hessian and plurisubharmonicity tests.

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qma/calculus.hpp"
#include "qma/fields.hpp"
#include "qma/hamilton.hpp"

namespace qma {

inline double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

namespace detail {

/// One ordered sequence of pairs (i_1 < j_1, ..., i_n < j_n) covering {0..2n-1}.
struct PairSequence {
  std::vector<std::pair<int, int>> pairs;
  int sign;
};

/// All (2n)!/2^n ordered pair sequences with the sign of the flattened permutation.
inline const std::vector<PairSequence>& pair_sequences(int n) {
  static const std::vector<std::vector<PairSequence>> table = [] {
    std::vector<std::vector<PairSequence>> t(4);
    for (int m = 1; m <= 3; ++m) {
      std::vector<PairSequence>& out = t[m];
      std::vector<std::pair<int, int>> cur;
      std::vector<char> used(2 * m, 0);
      auto rec = [&](auto&& self) -> void {
        if (static_cast<int>(cur.size()) == m) {
          std::vector<int> flat;
          for (auto [a, b] : cur) {
            flat.push_back(a);
            flat.push_back(b);
          }
          out.push_back({cur, perm_sign(flat, 2 * m)});
          return;
        }
        for (int a = 0; a < 2 * m; ++a) {
          if (used[a]) continue;
          for (int b = a + 1; b < 2 * m; ++b) {
            if (used[b]) continue;
            used[a] = used[b] = 1;
            cur.emplace_back(a, b);
            self(self);
            cur.pop_back();
            used[a] = used[b] = 0;
          }
        }
      };
      rec(rec);
    }
    return t;
  }();
  if (n < 1 || n > 3) throw dimension_error("Monge-Ampere sums support n <= 3");
  return table[n];
}

/// sum over perms sign * prod_k D^{(k)}_{i_k j_k}; each slot is an antisymmetric Delta matrix.
/// Returns the complex sum and the sum of moduli of its terms.
inline std::pair<cd, double> mixed_sum_complex(const std::vector<Eigen::MatrixXcd>& d) {
  const int n = static_cast<int>(d.size());
  cd total = 0;
  double scale = 0;
  for (const auto& seq : pair_sequences(n)) {
    cd prod = 1;
    for (int k = 0; k < n; ++k) prod *= d[k](seq.pairs[k].first, seq.pairs[k].second);
    total += double(seq.sign) * prod;
    scale += std::abs(prod);
  }
  // each unordered pair contributes twice through antisymmetry
  const double f = std::pow(2.0, n);
  return {f * total, f * scale};
}

inline double mixed_sum(const std::vector<Eigen::MatrixXcd>& d) {
  const auto [total, scale] = mixed_sum_complex(d);
  if (std::abs(total.imag()) > 1e-8 * std::max(1.0, scale))
    throw numerical_error("Monge-Ampere sum has a non-negligible imaginary part");
  return total.real();
}

} // namespace detail

/// Delta_n u at x from the Delta matrix (sum over perfect matchings).
inline double ma_density_from_delta(const Eigen::MatrixXcd& d) {
  const int n = static_cast<int>(d.rows()) / 2;
  std::vector<Eigen::MatrixXcd> slots(n, d);
  return detail::mixed_sum(slots);
}

inline double ma_density(const ScalarField& u, const Point& x) { return ma_density_from_delta(delta_matrix(u, x)); }

inline double mixed_ma(const std::vector<ScalarField>& us, const Point& x) {
  if (us.empty()) throw dimension_error("mixed_ma: no fields");
  const int n = us.front().n();
  if (static_cast<int>(us.size()) != n) throw dimension_error("mixed_ma: need exactly n fields");
  std::vector<Eigen::MatrixXcd> slots;
  for (const auto& u : us) {
    if (u.n() != n) throw dimension_error("mixed_ma: fields on different spaces");
    slots.push_back(delta_matrix(u, x));
  }
  return detail::mixed_sum(slots);
}

/// Entries 2(Delta_{(2l)(2k+1)} u + j Delta_{(2l+1)(2k+1)} u).
inline HMat hyperhermitian_from_delta(const Eigen::MatrixXcd& d, double tol = 1e-10) {
  const int n = static_cast<int>(d.rows()) / 2;
  QMat h(n, n);
  double scale = 0;
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k) {
      const cd a = 2.0 * d(2 * l, 2 * k + 1);
      const cd b = 2.0 * d(2 * l + 1, 2 * k + 1);
      // a + j b with a = a0 + a1 i, b = b0 + b1 i
      h(l, k) = Quat{a.real(), a.imag(), b.real(), -b.imag()};
      scale = std::max(scale, std::sqrt(h(l, k).norm2()));
    }
  for (int l = 0; l < n; ++l)
    for (int k = l; k < n; ++k)
      if (max_abs_diff(h(l, k), h(k, l).conj()) > tol * std::max(1.0, scale))
        throw numerical_error("Hessian failed the hyperhermitian check");
  for (int l = 0; l < n; ++l) {
    h(l, l) = Quat(h(l, l).x0);
    for (int k = l + 1; k < n; ++k) {
      Quat avg = 0.5 * (h(l, k) + h(k, l).conj());
      h(l, k) = avg;
      h(k, l) = avg.conj();
    }
  }
  return HMat(h);
}

inline HMat hyperhermitian_hessian(const ScalarField& u, const Point& x) {
  return hyperhermitian_from_delta(delta_matrix(u, x));
}

struct EquivalenceResult {
  double lhs;
  double rhs;
  double deviation;
};

inline EquivalenceResult moore_equivalence_check(const ScalarField& u, const Point& x) {
  const Eigen::MatrixXcd d = delta_matrix(u, x);
  const int n = u.n();
  const double lhs = ma_density_from_delta(d);
  const double rhs = factorial(n) * moore_det(hyperhermitian_from_delta(d));
  return {lhs, rhs, std::abs(lhs - rhs)};
}

inline EquivalenceResult mixed_equivalence_check(const std::vector<ScalarField>& us, const Point& x) {
  const double lhs = mixed_ma(us, x);
  std::vector<HMat> hs;
  for (const auto& u : us) hs.push_back(hyperhermitian_hessian(u, x));
  const double rhs = factorial(static_cast<int>(us.size())) * mixed_discriminant(hs);
  return {lhs, rhs, std::abs(lhs - rhs)};
}

/// Smallest eigenvalue of the Hermitian matrix tau(A).
inline double min_eigenvalue(const HMat& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(tau(a.matrix()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct PshResult {
  bool consistent = true;
  std::optional<Point> witness;
  double min_eigenvalue = 0;
};

/// Checks that the hyperhermitian Hessian is positive semidefinite at every sample.
inline PshResult psh_test(const ScalarField& u, const std::vector<Point>& samples) {
  PshResult r;
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& x : samples) {
    const HMat h = hyperhermitian_hessian(u, x);
    const double lo = min_eigenvalue(h);
    double scale = 0;
    for (int l = 0; l < h.n(); ++l)
      for (int k = 0; k < h.n(); ++k) scale = std::max(scale, std::sqrt(h(l, k).norm2()));
    r.min_eigenvalue = std::min(r.min_eigenvalue, lo);
    if (lo < -1e-9 * std::max(1.0, scale)) {
      r.consistent = false;
      r.witness = x;
      return r;
    }
  }
  return r;
}

/// 8^n n! eps / (|x|^2 + eps)^{2n+1}
inline double fundamental_reference(int n, double eps, const Point& x) {
  if (eps < 0) throw precondition_error("fundamental_reference: eps must be nonnegative");
  const double s = x.squaredNorm() + eps;
  if (s == 0) throw pole_error("fundamental_reference: pole at the origin for eps = 0");
  return std::pow(8.0, n) * factorial(n) * eps / std::pow(s, 2 * n + 1);
}

/// 8^n n! pi^{2n} / (2n)!, the total mass of (Delta(-1/|q|^2))^n.
inline double fundamental_mass(int n) { return std::pow(8.0, n) * factorial(n) * std::pow(M_PI, 2 * n) / factorial(2 * n); }

/// Mass of the eps-regularized density on the unit ball: fundamental_mass(n) / (1 + eps)^{2n}.
inline double fundamental_mass_unit_ball(int n, double eps) { return fundamental_mass(n) / std::pow(1 + eps, 2 * n); }

} // namespace qma
