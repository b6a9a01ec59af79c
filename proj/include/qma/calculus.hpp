#pragma once
/// @file calculus.hpp
/// Scalar fields with derivative oracles, the operators nabla_{j alpha}, d_0,
/// d_1, the second-order operator d_0 d_1 and its entries Delta_{ij}.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qma/errors.hpp"
#include "qma/exterior.hpp"
#include "qma/hamilton.hpp"
#include "qma/polynomial.hpp"

namespace qma {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Point = Eigen::VectorXd;

namespace detail {

/// Polynomial with double coefficients, used for fast evaluation.
struct CompiledPoly {
  struct Term {
    double c;
    Monomial m;
  };
  std::vector<Term> terms;

  CompiledPoly() = default;
  explicit CompiledPoly(const Polynomial& p) {
    for (const auto& [m, c] : p.terms()) terms.push_back({c.re.get_d(), m});
  }
  double operator()(const Vec& x) const {
    double s = 0;
    for (const auto& t : terms) {
      double v = t.c;
      for (int i = 0; i < x.size(); ++i)
        for (int e = 0; e < t.m[i]; ++e) v *= x[i];
      s += v;
    }
    return s;
  }
};

} // namespace detail

/// Real-valued function on R^{4n} with a second-derivative oracle.
class ScalarField {
public:
  enum class Kind { exact_polynomial, closed_form, black_box };
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;

  ScalarField() = default;

  static ScalarField polynomial(int n, Polynomial p) {
    check_n(n);
    if (!p.is_real()) throw precondition_error("scalar field polynomial must have real coefficients");
    for (const auto& [m, c] : p.terms())
      for (int i = 4 * n; i < max_vars; ++i)
        if (m[i]) throw precondition_error("polynomial uses variables beyond x_{4n-1}");
    auto impl = std::make_shared<Impl>();
    impl->n = n;
    impl->kind = Kind::exact_polynomial;
    const int d = 4 * n;
    impl->value_poly = detail::CompiledPoly(p);
    impl->grad_poly.resize(d);
    impl->hess_poly.resize(d * d);
    for (int a = 0; a < d; ++a) {
      Polynomial pa = p.derivative(a);
      impl->grad_poly[a] = detail::CompiledPoly(pa);
      for (int b = a; b < d; ++b) {
        detail::CompiledPoly hab(pa.derivative(b));
        impl->hess_poly[a * d + b] = hab;
        impl->hess_poly[b * d + a] = hab;
      }
    }
    impl->poly = std::move(p);
    return ScalarField(std::move(impl));
  }

  /// Evaluator with analytic gradient and Hessian. Missing oracles raise on use.
  static ScalarField closed_form(int n, ValueFn f, GradFn g = {}, HessFn h = {}) {
    check_n(n);
    auto impl = std::make_shared<Impl>();
    impl->n = n;
    impl->kind = Kind::closed_form;
    impl->f = std::move(f);
    impl->g = std::move(g);
    impl->h = std::move(h);
    return ScalarField(std::move(impl));
  }

  /// Central differences with step h; h <= 0 selects eps^{1/3} (1 + |x|).
  static ScalarField black_box(int n, ValueFn f, double h = 0) {
    check_n(n);
    auto impl = std::make_shared<Impl>();
    impl->n = n;
    impl->kind = Kind::black_box;
    impl->f = std::move(f);
    impl->step = h;
    return ScalarField(std::move(impl));
  }

  static ScalarField constant(int n, double c) {
    return closed_form(
        n, [c](const Vec&) { return c; }, [n](const Vec&) { return Vec(Vec::Zero(4 * n)); },
        [n](const Vec&) { return Mat(Mat::Zero(4 * n, 4 * n)); });
  }

  int n() const { return impl().n; }
  int dim() const { return 4 * impl().n; }
  Kind kind() const { return impl().kind; }
  bool valid() const { return static_cast<bool>(impl_); }
  /// The exact polynomial for ExactPolynomial fields.
  const Polynomial* exact() const { return impl().poly ? &*impl().poly : nullptr; }

  double operator()(const Vec& x) const {
    check_point(x);
    const Impl& s = impl();
    if (s.kind == Kind::exact_polynomial) return s.value_poly(x);
    return s.f(x);
  }

  Vec gradient(const Vec& x) const {
    check_point(x);
    const Impl& s = impl();
    const int d = dim();
    if (s.kind == Kind::exact_polynomial) {
      Vec g(d);
      for (int a = 0; a < d; ++a) g[a] = s.grad_poly[a](x);
      return g;
    }
    if (s.kind == Kind::closed_form) {
      if (!s.g) throw precondition_error("scalar field: insufficient oracle order (no gradient)");
      return s.g(x);
    }
    const double h = step(x);
    Vec g(d);
    Vec y = x;
    for (int a = 0; a < d; ++a) {
      y[a] = x[a] + h;
      double fp = s.f(y);
      y[a] = x[a] - h;
      double fm = s.f(y);
      y[a] = x[a];
      g[a] = (fp - fm) / (2 * h);
    }
    return g;
  }

  Mat hessian(const Vec& x) const {
    check_point(x);
    const Impl& s = impl();
    const int d = dim();
    if (s.kind == Kind::exact_polynomial) {
      Mat m(d, d);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) m(a, b) = s.hess_poly[a * d + b](x);
      return m;
    }
    if (s.kind == Kind::closed_form) {
      if (!s.h) throw precondition_error("scalar field: insufficient oracle order (no Hessian)");
      return s.h(x);
    }
    const double h = step(x);
    Mat m(d, d);
    Vec y = x;
    const double f0 = s.f(x);
    for (int a = 0; a < d; ++a) {
      y[a] = x[a] + h;
      double fp = s.f(y);
      y[a] = x[a] - h;
      double fm = s.f(y);
      y[a] = x[a];
      m(a, a) = (fp - 2 * f0 + fm) / (h * h);
      for (int b = a + 1; b < d; ++b) {
        double acc = 0;
        for (int sa : {1, -1})
          for (int sb : {1, -1}) {
            y[a] = x[a] + sa * h;
            y[b] = x[b] + sb * h;
            acc += sa * sb * s.f(y);
          }
        y[a] = x[a];
        y[b] = x[b];
        m(a, b) = m(b, a) = acc / (4 * h * h);
      }
    }
    return m;
  }

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b) { return combine(a, b, 1); }
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b) { return combine(a, b, -1); }
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    same_n(a, b);
    if (a.exact() && b.exact()) return polynomial(a.n(), *a.exact() * *b.exact());
    if (a.kind() == Kind::black_box || b.kind() == Kind::black_box)
      return black_box(a.n(), [a, b](const Vec& x) { return a(x) * b(x); });
    return closed_form(
        a.n(), [a, b](const Vec& x) { return a(x) * b(x); },
        [a, b](const Vec& x) { return Vec(a.gradient(x) * b(x) + b.gradient(x) * a(x)); },
        [a, b](const Vec& x) {
          Vec ga = a.gradient(x), gb = b.gradient(x);
          return Mat(a.hessian(x) * b(x) + b.hessian(x) * a(x) + ga * gb.transpose() + gb * ga.transpose());
        });
  }
  friend ScalarField operator*(double c, const ScalarField& a) {
    if (a.exact()) {
      mpq_class q(c);
      return polynomial(a.n(), Polynomial(Rational(q)) * *a.exact());
    }
    return ScalarField::constant(a.n(), c) * a;
  }

private:
  struct Impl {
    int n = 1;
    Kind kind = Kind::closed_form;
    std::optional<Polynomial> poly;
    detail::CompiledPoly value_poly;
    std::vector<detail::CompiledPoly> grad_poly, hess_poly;
    ValueFn f;
    GradFn g;
    HessFn h;
    double step = 0;
  };

  explicit ScalarField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  const Impl& impl() const {
    if (!impl_) throw precondition_error("scalar field is empty");
    return *impl_;
  }

  static void check_n(int n) {
    if (n < 1 || n > 2) throw dimension_error("scalar fields support n in {1, 2}");
  }
  void check_point(const Vec& x) const {
    if (x.size() != dim()) throw dimension_error("point has wrong dimension for field");
  }
  static void same_n(const ScalarField& a, const ScalarField& b) {
    if (a.n() != b.n()) throw dimension_error("scalar fields live on different spaces");
  }
  double step(const Vec& x) const {
    if (impl().step > 0) return impl().step;
    return std::cbrt(std::numeric_limits<double>::epsilon()) * (1 + x.norm());
  }

  static ScalarField combine(const ScalarField& a, const ScalarField& b, double sb) {
    same_n(a, b);
    if (a.exact() && b.exact())
      return polynomial(a.n(), sb > 0 ? *a.exact() + *b.exact() : *a.exact() - *b.exact());
    if (a.kind() == Kind::black_box || b.kind() == Kind::black_box)
      return black_box(a.n(), [a, b, sb](const Vec& x) { return a(x) + sb * b(x); });
    return closed_form(
        a.n(), [a, b, sb](const Vec& x) { return a(x) + sb * b(x); },
        [a, b, sb](const Vec& x) { return Vec(a.gradient(x) + sb * b.gradient(x)); },
        [a, b, sb](const Vec& x) { return Mat(a.hessian(x) + sb * b.hessian(x)); });
  }

  std::shared_ptr<const Impl> impl_;
};

/// u o M for a real linear map M (x -> M x).
inline ScalarField compose_linear(const ScalarField& u, const Mat& m) {
  if (m.rows() != u.dim() || m.cols() != u.dim()) throw dimension_error("compose_linear: shape mismatch");
  return ScalarField::closed_form(
      u.n(), [u, m](const Vec& x) { return u(Vec(m * x)); },
      [u, m](const Vec& x) { return Vec(m.transpose() * u.gradient(Vec(m * x))); },
      [u, m](const Vec& x) { return Mat(m.transpose() * u.hessian(Vec(m * x)) * m); });
}

// ---- first and second order operators ---------------------------------------

/// Complex coefficient vector c with nabla_{j alpha} u = c . grad u.
inline Eigen::VectorXcd nabla_vector(int n, int j, int alpha) {
  if (j < 0 || j >= 2 * n) throw precondition_error("nabla: index out of range");
  NablaStencil s = nabla_stencil(j, alpha);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(4 * n);
  for (int t = 0; t < 2; ++t) c[s.var[t]] = cd(s.coef[t].real(), s.coef[t].imag());
  return c;
}

inline cd nabla(const ScalarField& u, int j, int alpha, const Point& x) {
  Eigen::VectorXcd c = nabla_vector(u.n(), j, alpha);
  return c.cwiseProduct(u.gradient(x).cast<cd>()).sum();
}

/// The antisymmetric 2n x 2n matrix of Delta_{ij} built from a real Hessian.
inline Eigen::MatrixXcd delta_matrix_from_hessian(int n, const Mat& h) {
  const int m = 2 * n;
  if (h.rows() != 4 * n || h.cols() != 4 * n) throw dimension_error("delta_matrix: Hessian has wrong size");
  // nabla_a nabla_b u = c_a^T H c_b (no conjugation); each c has two nonzeros
  auto second = [&h](const NablaStencil& a, const NablaStencil& b) {
    cd s = 0;
    for (int t = 0; t < 2; ++t)
      for (int r = 0; r < 2; ++r)
        s += cd(a.coef[t].real(), a.coef[t].imag()) * cd(b.coef[r].real(), b.coef[r].imag()) * h(a.var[t], b.var[r]);
    return s;
  };
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const cd v = 0.5 * (second(nabla_stencil(i, 0), nabla_stencil(j, 1)) - second(nabla_stencil(i, 1), nabla_stencil(j, 0)));
      d(i, j) = v;
      d(j, i) = -v;
    }
  return d;
}

inline Eigen::MatrixXcd delta_matrix(const ScalarField& u, const Point& x) {
  return delta_matrix_from_hessian(u.n(), u.hessian(x));
}

inline cd delta_ij(const ScalarField& u, int i, int j, const Point& x) {
  if (i < 0 || j < 0 || i >= 2 * u.n() || j >= 2 * u.n()) throw precondition_error("delta_ij: index out of range");
  return delta_matrix(u, x)(i, j);
}

/// The 2-form sum_{i<j} 2 Delta_{ij} omega^i ^ omega^j from the Delta matrix.
inline Ext two_form(int n, const Eigen::MatrixXcd& d) {
  Ext e(n, 2);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = i + 1; j < 2 * n; ++j) e.add((Mask(1) << i) | (Mask(1) << j), 2.0 * d(i, j));
  return e;
}

/// d_0 d_1 u at x as an element of the second exterior power.
inline Ext laplace_at(const ScalarField& u, const Point& x) { return two_form(u.n(), delta_matrix(u, x)); }

// ---- exact forms with polynomial coefficients --------------------------------

inline PolyForm poly_scalar_form(int n, const Polynomial& p) { return PolyForm::scalar(n, p); }

/// d_alpha F = sum_{k, I} nabla_{k alpha} f_I omega^k ^ omega^I
inline PolyForm d_alpha(const PolyForm& f, int alpha) {
  const int n = f.n();
  PolyForm r(n, f.degree() + 1);
  if (f.degree() + 1 > 2 * n) return r;
  for (const auto& [m, c] : f.terms())
    for (int k = 0; k < 2 * n; ++k) {
      const Mask bit = Mask(1) << k;
      if (m & bit) continue;
      Polynomial v = nabla(c, k, alpha, n);
      if (v.is_zero()) continue;
      if (wedge_sign(bit, m) < 0) v = -v;
      r.add(m | bit, std::move(v));
    }
  return r;
}

inline PolyForm d0(const PolyForm& f) { return d_alpha(f, 0); }
inline PolyForm d1(const PolyForm& f) { return d_alpha(f, 1); }
inline PolyForm laplace(const PolyForm& f) { return d0(d1(f)); }
inline PolyForm laplace(int n, const Polynomial& u) { return laplace(poly_scalar_form(n, u)); }

inline bool is_closed(const PolyForm& f) { return d0(f).is_zero() && d1(f).is_zero(); }

inline Ext evaluate(const PolyForm& f, const Point& x) {
  Ext e(f.n(), f.degree());
  for (const auto& [m, c] : f.terms()) e.add(m, c(x));
  return e;
}

/// Random form of the given degree with random polynomial coefficients.
inline PolyForm random_poly_form(int n, int degree, int deg, int coefficients, std::mt19937_64& rng) {
  PolyForm f(n, degree);
  if (degree < 0 || degree > 2 * n) throw dimension_error("random_poly_form: bad degree");
  std::vector<Mask> masks;
  for (Mask m = 0; m < (Mask(1) << (2 * n)); ++m)
    if (std::popcount(m) == degree) masks.push_back(m);
  std::uniform_int_distribution<std::size_t> pick(0, masks.size() - 1);
  for (int t = 0; t < coefficients; ++t) f.add(masks[pick(rng)], random_polynomial(n, deg, 3, rng));
  return f;
}

// ---- pointwise form fields ---------------------------------------------------

/// Degree-p form whose coefficients are complex-valued fields (pairs of real fields).
class FormField {
public:
  FormField(int n, int degree) : n_(n), degree_(degree) {
    if (degree < 0 || degree > 2 * n) throw dimension_error("FormField: bad degree");
  }

  /// Converts an exact polynomial form to pointwise fields.
  static FormField from_poly(const PolyForm& f) {
    FormField r(f.n(), f.degree());
    for (const auto& [m, c] : f.terms())
      r.set(m, ScalarField::polynomial(f.n(), c.real_part()), ScalarField::polynomial(f.n(), c.imag_part()));
    return r;
  }

  void set(Mask m, ScalarField re, ScalarField im) {
    if (std::popcount(m) != degree_) throw dimension_error("FormField: multi-index length differs from degree");
    coeffs_.insert_or_assign(m, std::make_pair(std::move(re), std::move(im)));
  }

  int n() const { return n_; }
  int degree() const { return degree_; }

  Ext operator()(const Point& x) const {
    Ext e(n_, degree_);
    for (const auto& [m, c] : coeffs_) e.add(m, cd(c.first(x), c.second(x)));
    return e;
  }

  /// d_alpha of the field evaluated at x (needs first derivatives of the coefficients).
  Ext d_alpha_at(int alpha, const Point& x) const {
    Ext r(n_, degree_ + 1);
    if (degree_ + 1 > 2 * n_) return r;
    for (const auto& [m, c] : coeffs_) {
      Eigen::VectorXcd g = c.first.gradient(x).cast<cd>() + cd(0, 1) * c.second.gradient(x).cast<cd>();
      for (int k = 0; k < 2 * n_; ++k) {
        const Mask bit = Mask(1) << k;
        if (m & bit) continue;
        cd v = nabla_vector(n_, k, alpha).transpose() * g;
        r.add(m | bit, wedge_sign(bit, m) < 0 ? -v : v);
      }
    }
    return r;
  }

private:
  int n_;
  int degree_;
  std::map<Mask, std::pair<ScalarField, ScalarField>> coeffs_;
};

/// True when d_0 F and d_1 F vanish (to `tol`) at every sample point.
inline bool is_closed(const FormField& f, const std::vector<Point>& samples, double tol = 1e-9) {
  for (const auto& x : samples)
    for (int a = 0; a < 2; ++a)
      if (max_abs(f.d_alpha_at(a, x)) > tol) return false;
  return true;
}

// ---- change of variables -----------------------------------------------------

/// Compares nabla_{j alpha}(u~ o A)(q) with sum_t tau(A)_{tj} (nabla_{t alpha} u~)(Aq),
/// and Delta(u~ o A)(q) with the pullback A^*(Delta u~)(Aq). Returns the max deviation.
inline double change_of_variables_check(const ScalarField& ut, const QMat& a, const std::vector<Point>& samples) {
  const int n = ut.n();
  if (a.rows() != n || a.cols() != n) throw dimension_error("change_of_variables_check: A must be n x n");
  const Eigen::MatrixXcd t = tau(a);
  if (std::abs(t.determinant()) <= 1e-12 * std::pow(t.norm(), 2 * n))
    throw precondition_error("change_of_variables_check: A is singular");
  const Mat m = real_matrix(a);
  const ScalarField u = compose_linear(ut, m);
  const LinearMapHtoH g{a};
  double dev = 0;
  for (const auto& x : samples) {
    const Vec y = m * x;
    for (int alpha = 0; alpha < 2; ++alpha)
      for (int j = 0; j < 2 * n; ++j) {
        cd lhs = nabla(u, j, alpha, x);
        cd rhs = 0;
        for (int s = 0; s < 2 * n; ++s) rhs += t(s, j) * nabla(ut, s, alpha, y);
        dev = std::max(dev, std::abs(lhs - rhs));
      }
    Ext lhs = laplace_at(u, x);
    Ext rhs = pullback(g, laplace_at(ut, y));
    dev = std::max(dev, max_abs(lhs - rhs));
  }
  return dev;
}

} // namespace qma
