#pragma once
/// @file fields.hpp
/// Standard test fields: the squared norm, the shifted fundamental solution
/// -1/(|q - c|^2 + eps) and quaternionic quadratic forms.

#include <cmath>
#include <string>

#include "qma/calculus.hpp"

namespace qma {

inline ScalarField normsq(int n) { return ScalarField::polynomial(n, normsq_poly(n)); }

/// -1/(|x - c|^2 + eps) with analytic gradient and Hessian; eps = 0 is singular at c.
inline ScalarField invshift(int n, double eps, Vec center = {}) {
  if (eps < 0) throw precondition_error("invshift: eps must be nonnegative");
  if (center.size() == 0) center = Vec::Zero(4 * n);
  if (center.size() != 4 * n) throw dimension_error("invshift: center has wrong dimension");
  auto s_of = [center, eps](const Vec& x) {
    const double s = (x - center).squaredNorm() + eps;
    if (s == 0) throw pole_error("invshift: evaluation at the pole");
    return s;
  };
  return ScalarField::closed_form(
      n, [s_of](const Vec& x) { return -1.0 / s_of(x); },
      [s_of, center](const Vec& x) {
        const double s = s_of(x);
        return Vec(2.0 * (x - center) / (s * s));
      },
      [s_of, center, n](const Vec& x) {
        const double s = s_of(x);
        const Vec y = x - center;
        return Mat(2.0 / (s * s) * Mat::Identity(4 * n, 4 * n) - 8.0 / (s * s * s) * y * y.transpose());
      });
}

/// exp(-1/(1 - |x - c|^2 / R^2)) inside B(c, R), zero outside.
inline ScalarField bump(int n, Vec center, double radius) {
  if (!(radius > 0)) throw precondition_error("bump: radius must be positive");
  if (center.size() == 0) center = Vec::Zero(4 * n);
  if (center.size() != 4 * n) throw dimension_error("bump: center has wrong dimension");
  const double r2 = radius * radius;
  // phi(s) = exp(-1/(1-s)), s = |y|^2/R^2; phi' = -phi/(1-s)^2, phi'' = phi (1/(1-s)^4 - 2/(1-s)^3)
  auto phi = [](double s, int order) {
    if (s >= 1) return 0.0;
    const double a = 1 / (1 - s), v = std::exp(-a);
    if (order == 0) return v;
    if (order == 1) return -v * a * a;
    return v * (a * a * a * a - 2 * a * a * a);
  };
  return ScalarField::closed_form(
      n, [=](const Vec& x) { return phi((x - center).squaredNorm() / r2, 0); },
      [=](const Vec& x) {
        const Vec y = x - center;
        return Vec(phi(y.squaredNorm() / r2, 1) * 2 / r2 * y);
      },
      [=](const Vec& x) {
        const Vec y = x - center;
        const double s = y.squaredNorm() / r2;
        return Mat(phi(s, 2) * 4 / (r2 * r2) * y * y.transpose() + phi(s, 1) * 2 / r2 * Mat::Identity(4 * n, 4 * n));
      });
}

/// The quaternion coordinates q_j = x_{4j} + x_{4j+1} i + x_{4j+2} j + x_{4j+3} k as polynomials.
inline Quaternion<Polynomial> q_coord(int j) {
  return {Polynomial::var(4 * j), Polynomial::var(4 * j + 1), Polynomial::var(4 * j + 2),
          Polynomial::var(4 * j + 3)};
}

/// Re sum_{j,k} conj(q_j) A_{jk} q_k; real for hyperhermitian A.
inline Polynomial quadform_poly(const HyperhermitianMatrix<Rational>& a) {
  const int n = a.n();
  if (n < 1 || n > 2) throw dimension_error("quadform: n must be 1 or 2");
  Polynomial p;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const auto& e = a(j, k);
      Quaternion<Polynomial> c{Polynomial(e.x0), Polynomial(e.x1), Polynomial(e.x2), Polynomial(e.x3)};
      p += (q_coord(j).conj() * c * q_coord(k)).x0;
    }
  return p;
}

inline HyperhermitianMatrix<Rational> to_rational(const HMat& a) {
  QMatrix<Rational> m(a.n(), a.n());
  for (int r = 0; r < a.n(); ++r)
    for (int c = 0; c < a.n(); ++c) {
      const Quat& q = a(r, c);
      m(r, c) = {Rational(q.x0), Rational(q.x1), Rational(q.x2), Rational(q.x3)};
    }
  // exact conversion of doubles can break exact symmetry only if the input was asymmetric
  for (int r = 0; r < a.n(); ++r) {
    m(r, r) = Quaternion<Rational>(m(r, r).x0);
    for (int c = r + 1; c < a.n(); ++c) m(c, r) = m(r, c).conj();
  }
  return HyperhermitianMatrix<Rational>(m);
}

inline ScalarField quadform(const HyperhermitianMatrix<Rational>& a) {
  return ScalarField::polynomial(a.n(), quadform_poly(a));
}
inline ScalarField quadform(const HMat& a) { return quadform(to_rational(a)); }

} // namespace qma
