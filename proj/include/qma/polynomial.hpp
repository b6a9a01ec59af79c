#pragma once
/// @file polynomial.hpp
/// Sparse multivariate polynomials with exact Gaussian-rational coefficients in
/// the real coordinates x_0 .. x_{4n-1} (at most 8 variables).

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qma/errors.hpp"
#include "qma/exterior.hpp"
#include "qma/rational.hpp"

namespace qma {

inline constexpr int max_vars = 8;
using Monomial = std::array<std::uint8_t, max_vars>;

class Polynomial {
public:
  Polynomial() = default;
  Polynomial(GaussRational c) {
    if (!c.is_zero()) terms_.emplace(Monomial{}, std::move(c));
  }
  Polynomial(int c) : Polynomial(GaussRational(c)) {}
  Polynomial(Rational c) : Polynomial(GaussRational(std::move(c))) {}

  /// The coordinate x_i.
  static Polynomial var(int i) {
    if (i < 0 || i >= max_vars) throw precondition_error("Polynomial::var: index out of range");
    Polynomial p;
    Monomial m{};
    m[i] = 1;
    p.terms_.emplace(m, GaussRational(1));
    return p;
  }

  const std::map<Monomial, GaussRational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = -1;
    for (const auto& [m, c] : terms_) {
      int s = 0;
      for (auto e : m) s += e;
      d = std::max(d, s);
    }
    return d;
  }

  /// True when every coefficient has zero imaginary part.
  bool is_real() const {
    for (const auto& [m, c] : terms_)
      if (sgn(c.im) != 0) return false;
    return true;
  }

  Polynomial conj() const {
    Polynomial r;
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, c.conj());
    return r;
  }
  Polynomial real_part() const {
    Polynomial r;
    for (const auto& [m, c] : terms_)
      if (sgn(c.re) != 0) r.terms_.emplace(m, GaussRational(c.re));
    return r;
  }
  Polynomial imag_part() const {
    Polynomial r;
    for (const auto& [m, c] : terms_)
      if (sgn(c.im) != 0) r.terms_.emplace(m, GaussRational(c.im));
    return r;
  }

  Polynomial derivative(int i) const {
    if (i < 0 || i >= max_vars) throw precondition_error("Polynomial::derivative: index out of range");
    Polynomial r;
    for (const auto& [m, c] : terms_) {
      if (m[i] == 0) continue;
      Monomial d = m;
      d[i] -= 1;
      r.terms_.emplace(d, c * GaussRational(static_cast<long>(m[i])));
    }
    return r;
  }

  template <class Vec>
  std::complex<double> operator()(const Vec& x) const {
    std::complex<double> s = 0;
    for (const auto& [m, c] : terms_) {
      double v = 1;
      for (int i = 0; i < max_vars; ++i)
        for (int e = 0; e < m[i]; ++e) v *= x[i];
      s += c.to_complex() * v;
    }
    return s;
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [m, c] : o.terms_) add(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [m, c] : o.terms_) add(m, -c);
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(const Polynomial& a) {
    Polynomial r;
    for (const auto& [m, c] : a.terms_) r.terms_.emplace(m, -c);
    return r;
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial r;
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) {
        Monomial m;
        for (int i = 0; i < max_vars; ++i) {
          if (int(ma[i]) + mb[i] > 255) throw precondition_error("Polynomial: exponent overflow");
          m[i] = static_cast<std::uint8_t>(ma[i] + mb[i]);
        }
        r.add(m, ca * cb);
      }
    return r;
  }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << c.str();
      for (int i = 0; i < max_vars; ++i)
        if (m[i]) os << "*x" << i << (m[i] > 1 ? "^" + std::to_string(m[i]) : "");
    }
    return os.str();
  }

private:
  void add(const Monomial& m, const GaussRational& c) {
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      if (!c.is_zero()) terms_.emplace(m, c);
    } else {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  std::map<Monomial, GaussRational> terms_;
};

inline Polynomial pow(const Polynomial& p, int e) {
  if (e < 0) throw precondition_error("negative polynomial power");
  Polynomial r(1);
  for (int i = 0; i < e; ++i) r *= p;
  return r;
}

template <>
struct coeff_traits<Polynomial> {
  static bool is_zero(const Polynomial& p) { return p.is_zero(); }
  static Polynomial conj(const Polynomial& p) { return p.conj(); }
};

using PolyForm = ExtElement<Polynomial>;

// ---- first-order operators in quaternionic coordinates ----------------------

/// Coefficients c with nabla_{j alpha} = sum_m c_m d/dx_m (four nonzero entries).
struct NablaStencil {
  std::array<int, 2> var;
  std::array<std::complex<int>, 2> coef;
};

/// nabla_{(2l)0} = d_{4l} + i d_{4l+1},   nabla_{(2l)1} = -d_{4l+2} - i d_{4l+3},
/// nabla_{(2l+1)0} = d_{4l+2} - i d_{4l+3}, nabla_{(2l+1)1} = d_{4l} - i d_{4l+1}.
inline NablaStencil nabla_stencil(int j, int alpha) {
  if (alpha < 0 || alpha > 1) throw precondition_error("nabla: alpha must be 0 or 1");
  if (j < 0) throw precondition_error("nabla: index out of range");
  const int l = j / 2;
  const int b = 4 * l;
  const bool even = j % 2 == 0;
  if (even && alpha == 0) return {{b, b + 1}, {std::complex<int>(1, 0), std::complex<int>(0, 1)}};
  if (even && alpha == 1) return {{b + 2, b + 3}, {std::complex<int>(-1, 0), std::complex<int>(0, -1)}};
  if (!even && alpha == 0) return {{b + 2, b + 3}, {std::complex<int>(1, 0), std::complex<int>(0, -1)}};
  return {{b, b + 1}, {std::complex<int>(1, 0), std::complex<int>(0, -1)}};
}

inline GaussRational to_gauss(std::complex<int> c) { return {Rational(c.real()), Rational(c.imag())}; }

inline Polynomial nabla(const Polynomial& p, int j, int alpha, int n) {
  if (j >= 2 * n) throw precondition_error("nabla: index out of range");
  NablaStencil s = nabla_stencil(j, alpha);
  Polynomial r;
  for (int t = 0; t < 2; ++t) r += Polynomial(to_gauss(s.coef[t])) * p.derivative(s.var[t]);
  return r;
}

/// Complex coordinate z^{j alpha}, laid out like the rows of tau(q).
inline Polynomial z_coord(int j, int alpha) {
  if (alpha < 0 || alpha > 1 || j < 0 || j >= 4) throw precondition_error("z_coord: index out of range");
  const int b = 4 * (j / 2);
  const Polynomial I(GaussRational::imag_unit());
  const bool even = j % 2 == 0;
  if (even && alpha == 0) return Polynomial::var(b) - I * Polynomial::var(b + 1);
  if (even && alpha == 1) return -Polynomial::var(b + 2) + I * Polynomial::var(b + 3);
  if (!even && alpha == 0) return Polynomial::var(b + 2) + I * Polynomial::var(b + 3);
  return Polynomial::var(b) + I * Polynomial::var(b + 1);
}

inline Polynomial normsq_poly(int n) {
  Polynomial p;
  for (int i = 0; i < 4 * n; ++i) p += Polynomial::var(i) * Polynomial::var(i);
  return p;
}

/// Random polynomial of total degree <= deg in 4n variables with small Gaussian-integer coefficients.
inline Polynomial random_polynomial(int n, int deg, int terms, std::mt19937_64& rng, bool real = false) {
  std::uniform_int_distribution<int> var(0, 4 * n - 1);
  std::uniform_int_distribution<int> d(0, deg);
  std::uniform_int_distribution<int> c(-3, 3);
  Polynomial p;
  for (int t = 0; t < terms; ++t) {
    Polynomial m(GaussRational(Rational(c(rng)), Rational(real ? 0 : c(rng))));
    const int dd = d(rng);
    for (int e = 0; e < dd; ++e) m *= Polynomial::var(var(rng));
    p += m;
  }
  return p;
}

} // namespace qma
