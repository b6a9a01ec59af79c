#pragma once
/// @file currents.hpp
/// Closed positive currents represented by smooth densities: Bedford-Taylor
/// products, masses on balls, Lelong numbers, Stokes checks and mollification.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qma/calculus.hpp"
#include "qma/fields.hpp"
#include "qma/monge_ampere.hpp"
#include "qma/quadrature.hpp"

namespace qma {

/// Increasing multi-indices of one length, ordered by mask value.
struct FormBasis {
  std::vector<Mask> masks;
  std::vector<int> index; // mask -> position, -1 when the length differs
};

inline const FormBasis& form_basis(int n, int degree) {
  static const auto table = [] {
    std::array<std::array<FormBasis, 7>, 4> t;
    for (int m = 1; m <= 3; ++m)
      for (int d = 0; d <= 2 * m; ++d) {
        FormBasis& b = t[m][d];
        b.index.assign(std::size_t(1) << (2 * m), -1);
        for (Mask k = 0; k < (Mask(1) << (2 * m)); ++k)
          if (std::popcount(k) == d) {
            b.index[k] = static_cast<int>(b.masks.size());
            b.masks.push_back(k);
          }
      }
    return t;
  }();
  if (n < 1 || n > 3 || degree < 0 || degree > 2 * n) throw dimension_error("form_basis: bad (n, degree)");
  return table[n][degree];
}

/// T = sum_I T_I omega^I with smooth complex densities T_I.
class RegularizedCurrent {
public:
  /// Dense coefficients in form_basis(n, degree) order.
  using DensityFn = std::function<Eigen::VectorXcd(const Point&)>;

  RegularizedCurrent(int n, int degree, DensityFn f, std::string label, std::optional<PolyForm> exact = {}) {
    if (degree % 2) throw dimension_error("currents have even degree");
    form_basis(n, degree);
    auto impl = std::make_shared<Impl>();
    impl->n = n;
    impl->degree = degree;
    impl->f = std::move(f);
    impl->label = std::move(label);
    impl->exact = std::move(exact);
    impl_ = std::move(impl);
  }

  static RegularizedCurrent constant(const Ext& form, std::string label) {
    const FormBasis& b = form_basis(form.n(), form.degree());
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(b.masks.size());
    for (const auto& [m, v] : form.terms()) c[b.index[m]] = v;
    return RegularizedCurrent(form.n(), form.degree(), [c](const Point&) { return c; }, std::move(label));
  }

  static RegularizedCurrent from_poly(const PolyForm& f, std::string label) {
    const FormBasis& b = form_basis(f.n(), f.degree());
    std::vector<std::pair<detail::CompiledPoly, detail::CompiledPoly>> parts(b.masks.size());
    for (const auto& [m, c] : f.terms())
      parts[b.index[m]] = {detail::CompiledPoly(c.real_part()), detail::CompiledPoly(c.imag_part())};
    return RegularizedCurrent(
        f.n(), f.degree(),
        [parts](const Point& x) {
          Eigen::VectorXcd c(parts.size());
          for (std::size_t i = 0; i < parts.size(); ++i) c[i] = cd(parts[i].first(x), parts[i].second(x));
          return c;
        },
        std::move(label), f);
  }

  /// The 0-current 1.
  static RegularizedCurrent unit(int n) { return from_poly(PolyForm::scalar(n, Polynomial(1)), "1"); }

  int n() const { return impl_->n; }
  int degree() const { return impl_->degree; }
  /// p with degree = 2n - 2p.
  int codegree() const { return impl_->n - impl_->degree / 2; }
  const std::string& label() const { return impl_->label; }
  const PolyForm* exact() const { return impl_->exact ? &*impl_->exact : nullptr; }

  Eigen::VectorXcd coefficients(const Point& x) const {
    if (x.size() != 4 * n()) throw dimension_error("current evaluated at a point of wrong dimension");
    return impl_->f(x);
  }

  Ext operator()(const Point& x) const {
    const FormBasis& b = form_basis(n(), degree());
    const Eigen::VectorXcd c = coefficients(x);
    Ext e(n(), degree());
    for (std::size_t i = 0; i < b.masks.size(); ++i) e.add(b.masks[i], c[i]);
    return e;
  }

  RegularizedCurrent scaled(double s) const {
    RegularizedCurrent self = *this;
    std::optional<PolyForm> e;
    if (exact()) e = Polynomial(Rational(mpq_class(s))) * *exact();
    return RegularizedCurrent(
        n(), degree(), [self, s](const Point& x) { return Eigen::VectorXcd(s * self.coefficients(x)); }, label(), e);
  }

private:
  struct Impl {
    int n = 1;
    int degree = 0;
    DensityFn f;
    std::string label;
    std::optional<PolyForm> exact;
  };
  std::shared_ptr<const Impl> impl_;
};

namespace detail {

struct BtTerm {
  int target, i, j, source, sign;
};

/// Terms of omega^{ij} ^ omega^I -> omega^J for all i < j outside I.
inline std::vector<BtTerm> bt_table(int n, int degree) {
  const FormBasis& src = form_basis(n, degree);
  const FormBasis& dst = form_basis(n, degree + 2);
  std::vector<BtTerm> out;
  for (std::size_t s = 0; s < src.masks.size(); ++s)
    for (int i = 0; i < 2 * n; ++i)
      for (int j = i + 1; j < 2 * n; ++j) {
        const Mask pair = (Mask(1) << i) | (Mask(1) << j);
        if (pair & src.masks[s]) continue;
        out.push_back({dst.index[pair | src.masks[s]], i, j, static_cast<int>(s), wedge_sign(pair, src.masks[s])});
      }
  return out;
}

struct Complement {
  std::vector<int> idx;
  int sign; // omega^I ^ omega^{I^c} = sign Omega
};

inline std::vector<Complement> complements(int n, int degree) {
  const FormBasis& b = form_basis(n, degree);
  const Mask full = (Mask(1) << (2 * n)) - 1;
  std::vector<Complement> out;
  for (Mask m : b.masks) out.push_back({mask_indices(full & ~m), wedge_sign(m, full & ~m)});
  return out;
}

} // namespace detail

/// Delta u ^ T, the smooth case of the Bedford-Taylor product.
inline RegularizedCurrent bt_product(const ScalarField& u, const RegularizedCurrent& t, const std::string& u_label = "u") {
  const int n = t.n();
  if (u.n() != n) throw dimension_error("bt_product: field and current live on different spaces");
  if (t.degree() + 2 > 2 * n) throw dimension_error("bt_product: degree overflow");
  auto table = std::make_shared<const std::vector<detail::BtTerm>>(detail::bt_table(n, t.degree()));
  const int size = static_cast<int>(form_basis(n, t.degree() + 2).masks.size());
  std::string label = "laplace(" + u_label + ")";
  if (t.label() != "1") label += "^" + t.label();
  if (u.exact() && t.exact()) return RegularizedCurrent::from_poly(wedge(laplace(n, *u.exact()), *t.exact()), label);
  return RegularizedCurrent(
      n, t.degree() + 2,
      [u, t, table, size, n](const Point& x) {
        const Eigen::MatrixXcd d = delta_matrix_from_hessian(n, u.hessian(x));
        const Eigen::VectorXcd c = t.coefficients(x);
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(size);
        for (const auto& e : *table) out[e.target] += double(2 * e.sign) * d(e.i, e.j) * c[e.source];
        return out;
      },
      label);
}

/// Delta u as a 2-current.
inline RegularizedCurrent laplace_current(const ScalarField& u, const std::string& u_label = "u") {
  return bt_product(u, RegularizedCurrent::unit(u.n()), u_label);
}

/// Delta u_1 ^ ... ^ Delta u_k.
inline RegularizedCurrent laplace_product(const std::vector<ScalarField>& us) {
  if (us.empty()) throw precondition_error("laplace_product: no fields");
  RegularizedCurrent t = RegularizedCurrent::unit(us.front().n());
  for (std::size_t i = 0; i < us.size(); ++i) t = bt_product(us[i], t, "u" + std::to_string(i + 1));
  return t;
}

inline RegularizedCurrent beta_power(int n, int k) {
  if (k < 0 || k > n) throw dimension_error("beta_power: exponent out of range");
  if (k == 0) return RegularizedCurrent::unit(n);
  return RegularizedCurrent::from_poly(wedge_power(beta_n<Polynomial>(n), k), k == 1 ? "beta" : "beta^" + std::to_string(k));
}

/// The antisymmetric matrix whose two-form sum_{i<j} 2 D_ij omega^ij is beta_n.
inline Eigen::MatrixXcd beta_delta(int n) {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  for (int l = 0; l < n; ++l) {
    d(2 * l, 2 * l + 1) = 0.5;
    d(2 * l + 1, 2 * l) = -0.5;
  }
  return d;
}

/// Top coefficient of T ^ D_1 ^ ... ^ D_p, each D_k an antisymmetric Delta matrix.
inline cd top_pairing(int n, int degree, const Eigen::VectorXcd& t, const std::vector<Eigen::MatrixXcd>& slots) {
  const int p = static_cast<int>(slots.size());
  if (degree + 2 * p != 2 * n) throw dimension_error("top_pairing: degrees do not add up to the top degree");
  if (p == 0) return t[0];
  static thread_local std::vector<detail::Complement> comp;
  static thread_local int cached_n = -1, cached_degree = -1;
  if (cached_n != n || cached_degree != degree) {
    comp = detail::complements(n, degree);
    cached_n = n;
    cached_degree = degree;
  }
  std::vector<Eigen::MatrixXcd> sub(p, Eigen::MatrixXcd(2 * p, 2 * p));
  cd total = 0;
  for (std::size_t s = 0; s < comp.size(); ++s) {
    if (t[s] == cd(0)) continue;
    const auto& idx = comp[s].idx;
    for (int k = 0; k < p; ++k)
      for (int a = 0; a < 2 * p; ++a)
        for (int b = 0; b < 2 * p; ++b) sub[k](a, b) = slots[k](idx[a], idx[b]);
    total += double(comp[s].sign) * t[s] * detail::mixed_sum_complex(sub).first;
  }
  return total;
}

/// Weights w with top(T ^ beta^p) = sum_I w_I T_I.
inline Eigen::VectorXcd beta_weights(int n, int degree) {
  const int size = static_cast<int>(form_basis(n, degree).masks.size());
  const std::vector<Eigen::MatrixXcd> slots(n - degree / 2, beta_delta(n));
  Eigen::VectorXcd w(size);
  for (int i = 0; i < size; ++i) w[i] = top_pairing(n, degree, Eigen::VectorXcd::Unit(size, i), slots);
  return w;
}

/// Density of T ^ beta^p with respect to Lebesgue measure.
inline double mass_density(const RegularizedCurrent& t, const Point& x) {
  return t.coefficients(x).cwiseProduct(beta_weights(t.n(), t.degree())).sum().real();
}

/// sigma_T(a, r) = int_{B(a,r)} T ^ beta^p.
inline Estimate sigma_mass(const RegularizedCurrent& t, const Point& a, double r, const BallQuadrature& q,
                           double max_rel_error = std::numeric_limits<double>::infinity()) {
  if (a.size() != 4 * t.n()) throw dimension_error("sigma_mass: center has wrong dimension");
  if (!(r > 0)) throw precondition_error("sigma_mass: radius must be positive");
  const Eigen::VectorXcd w = beta_weights(t.n(), t.degree());
  const Estimate e =
      integrate_ball([&t, &w](const Point& x) { return t.coefficients(x).cwiseProduct(w).sum().real(); }, a, r, q);
  if (e.error > max_rel_error * std::abs(e.value)) throw numerical_error("sigma_mass: quadrature did not converge");
  return e;
}

/// Chern-Levine-Nirenberg norm int_K T ^ beta^p over the ball K.
inline Estimate cln_norm(const RegularizedCurrent& t, const Point& center, double radius, const BallQuadrature& q) {
  return sigma_mass(t, center, radius, q);
}

struct ClnRatio {
  double norm = 0;
  double norm_error = 0;
  double sup_product = 0;
  double ratio = 0;
};

/// ||Delta u_1 ^ ... ^ Delta u_k||_L / prod sup_K |u_i| for balls L = B(c, r_inner) in K = B(c, r_outer).
inline ClnRatio cln_ratio(const std::vector<ScalarField>& us, const Point& center, double r_inner, double r_outer,
                          const BallQuadrature& q) {
  if (!(r_inner > 0 && r_inner <= r_outer)) throw precondition_error("cln_ratio: need 0 < r_inner <= r_outer");
  const RegularizedCurrent t = laplace_product(us);
  const Estimate norm = cln_norm(t, center, r_inner, q);
  const int dim = static_cast<int>(center.size());
  const SphereRule s = sphere_rule(dim, sphere_level_for(dim, q.sphere_nodes), q.seed);
  std::vector<double> radii = radial_rule(0, r_outer, q.radial_nodes, dim).nodes;
  radii.push_back(r_outer);
  ClnRatio r;
  r.norm = norm.value;
  r.norm_error = norm.error;
  r.sup_product = 1;
  for (const auto& u : us) {
    double sup = std::abs(u(center));
    for (double rho : radii)
      for (std::size_t k = 0; k < s.size(); ++k) sup = std::max(sup, std::abs(u(Point(center + rho * s.nodes.col(k)))));
    if (sup == 0) throw precondition_error("cln_ratio: zero sup-norm");
    r.sup_product *= sup;
  }
  r.ratio = r.norm / r.sup_product;
  return r;
}

struct RadialProfile {
  std::vector<double> radii;  // increasing
  std::vector<double> values; // sigma_T(a, r) / r^{4p}
  std::vector<double> errors;
};

struct LelongResult {
  RadialProfile profile;
  double nu = 0;
  double nu_error = 0;
  double nu_radius = 0;
  bool monotone = true;
};

/// Profile r -> sigma_T(a, r)/r^{4p} on geometric radii; nu is read at the
/// smallest radius whose error estimate is below 10% of its value.
inline LelongResult lelong_number(const RegularizedCurrent& t, const Point& a, std::vector<double> radii,
                                  const BallQuadrature& q) {
  if (radii.empty()) throw precondition_error("lelong_number: no radii");
  std::sort(radii.begin(), radii.end());
  if (radii.front() <= 0) throw precondition_error("lelong_number: radii must be positive");
  for (std::size_t k = 1; k < radii.size(); ++k) {
    if (radii[k] == radii[k - 1]) throw precondition_error("lelong_number: repeated radius");
    if (k >= 2 && std::abs(radii[k] / radii[k - 1] - radii[1] / radii[0]) > 1e-9 * radii[1] / radii[0])
      throw precondition_error("lelong_number: radii must form a geometric sequence");
  }
  const int p4 = 4 * t.codegree();
  LelongResult res;
  res.profile.radii = radii;
  for (double r : radii) {
    const Estimate e = sigma_mass(t, a, r, q);
    const double s = std::pow(r, p4);
    res.profile.values.push_back(e.value / s);
    res.profile.errors.push_back(e.error / s);
  }
  const auto& v = res.profile.values;
  const auto& err = res.profile.errors;
  double vmax = 0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] < v[k - 1] - (err[k] + err[k - 1]) - 1e-12 * vmax) res.monotone = false;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (err[k] <= 0.1 * std::abs(v[k])) {
      res.nu = v[k];
      res.nu_error = err[k];
      res.nu_radius = radii[k];
      return res;
    }
  throw numerical_error("lelong_number: no radius with a reliable quadrature estimate");
}

struct ShellResult {
  double lhs = 0;
  double rhs = 0;
  double residual = 0;
  double error = 0;
};

/// Compares int_{r1<|x-a|<r2} T ^ (Delta(-1/|x-a|^2))^p with
/// 8^p (sigma(r2)/r2^{4p} - sigma(r1)/r1^{4p}).
inline ShellResult shell_identity_check(const RegularizedCurrent& t, const Point& a, double r1, double r2,
                                        const BallQuadrature& q) {
  if (!(r1 > 0 && r1 <= r2)) throw precondition_error("shell_identity_check: need 0 < r1 <= r2");
  ShellResult res;
  if (r1 == r2) return res;
  const int n = t.n(), p = t.codegree();
  const ScalarField g = invshift(n, 0.0, a);
  const auto lhs = integrate_shell(
      [&](const Point& x) {
        const std::vector<Eigen::MatrixXcd> slots(p, delta_matrix_from_hessian(n, g.hessian(x)));
        return top_pairing(n, t.degree(), t.coefficients(x), slots).real();
      },
      a, r1, r2, q);
  const Estimate s1 = sigma_mass(t, a, r1, q), s2 = sigma_mass(t, a, r2, q);
  const double f = std::pow(8.0, p);
  res.lhs = lhs.value;
  res.rhs = f * (s2.value / std::pow(r2, 4 * p) - s1.value / std::pow(r1, 4 * p));
  res.residual = std::abs(res.lhs - res.rhs);
  res.error = lhs.error + f * (s2.error / std::pow(r2, 4 * p) + s1.error / std::pow(r1, 4 * p));
  return res;
}

struct StokesResult {
  cd lhs;
  cd rhs;
  double residual = 0;
  double error = 0;
};

/// int_B h d_alpha T against -int_B d_alpha h ^ T for a (2n-1)-form T and h
/// vanishing near the boundary of B.
inline StokesResult stokes_check(const ScalarField& h, const FormField& t, int alpha, const Point& center, double radius,
                                 const BallQuadrature& q) {
  const int n = t.n();
  if (h.n() != n) throw dimension_error("stokes_check: h and T live on different spaces");
  if (t.degree() != 2 * n - 1) throw dimension_error("stokes_check: T must have degree 2n - 1");
  const int dim = 4 * n;
  const SphereRule s = sphere_rule(dim, sphere_level_for(dim, q.sphere_nodes), q.seed);
  double inner = std::abs(h(center)), edge = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    inner = std::max(inner, std::abs(h(Point(center + 0.5 * radius * s.nodes.col(k)))));
    for (double f : {0.99, 1.0}) edge = std::max(edge, std::abs(h(Point(center + f * radius * s.nodes.col(k)))));
  }
  if (edge > 1e-12 * std::max(1.0, inner))
    throw precondition_error("stokes_check: h does not vanish near the boundary of the domain");
  auto lhs = integrate_ball([&](const Point& x) { return h(x) * top_coefficient(t.d_alpha_at(alpha, x)); }, center,
                            radius, q);
  auto rhs = integrate_ball(
      [&](const Point& x) {
        Ext dh(n, 1);
        for (int j = 0; j < 2 * n; ++j) dh.add(Mask(1) << j, nabla(h, j, alpha, x));
        return -top_coefficient(wedge(dh, t(x)));
      },
      center, radius, q);
  return {lhs.value, rhs.value, std::abs(lhs.value - rhs.value), lhs.error + rhs.error};
}

// ---- mollification -------------------------------------------------------------

struct MollifyOptions {
  double half_width = 1.0; // the grid covers [-L, L]^4
  int points = 33;         // grid points per axis
  int radial_nodes = 32;
  std::size_t sphere_nodes = 256;
  std::uint64_t seed = 0;
};

namespace detail {

/// Multilinear interpolation of samples on a uniform grid in R^4.
struct Grid4 {
  double lo = 0, h = 0;
  int m = 0;
  std::vector<double> v;

  double operator()(const double* x) const {
    int base[4];
    double t[4];
    for (int a = 0; a < 4; ++a) {
      const double s = (x[a] - lo) / h;
      int i = static_cast<int>(std::floor(s));
      i = std::clamp(i, 0, m - 2);
      base[a] = i;
      t[a] = s - i;
    }
    double acc = 0;
    for (int c = 0; c < 16; ++c) {
      double w = 1;
      std::size_t idx = 0;
      for (int a = 0; a < 4; ++a) {
        const int bit = (c >> a) & 1;
        w *= bit ? t[a] : 1 - t[a];
        idx = idx * m + base[a] + bit;
      }
      acc += w * v[idx];
    }
    return acc;
  }

  double at(const int* i) const { return v[((std::size_t(i[0]) * m + i[1]) * m + i[2]) * m + i[3]]; }

  /// Quadratic through centered differences at the grid node nearest to x; exact for quadratic samples.
  struct Quadratic {
    Eigen::Vector4d anchor, g;
    Eigen::Matrix4d hess;
    double u0 = 0;
    double operator()(const Eigen::Vector4d& y) const {
      const Eigen::Vector4d d = y - anchor;
      return u0 + g.dot(d) + 0.5 * d.dot(hess * d);
    }
  };

  Quadratic quadratic_near(const double* x) const {
    int c[4];
    Quadratic q;
    for (int a = 0; a < 4; ++a) {
      c[a] = std::clamp(static_cast<int>(std::lround((x[a] - lo) / h)), 1, m - 2);
      q.anchor[a] = lo + c[a] * h;
    }
    q.u0 = at(c);
    auto shifted = [&](int a, int da, int b, int db) {
      int i[4] = {c[0], c[1], c[2], c[3]};
      i[a] += da;
      i[b] += db;
      return at(i);
    };
    for (int a = 0; a < 4; ++a) {
      const double up = shifted(a, 1, a, 0), dn = shifted(a, -1, a, 0);
      q.g[a] = (up - dn) / (2 * h);
      q.hess(a, a) = (up - 2 * q.u0 + dn) / (h * h);
      for (int b = 0; b < a; ++b) {
        const double mixed = (shifted(a, 1, b, 1) - shifted(a, 1, b, -1) - shifted(a, -1, b, 1) + shifted(a, -1, b, -1)) / (4 * h * h);
        q.hess(a, b) = q.hess(b, a) = mixed;
      }
    }
    return q;
  }
};

/// int_0^1 rho^{k} exp(-1/(1 - rho^2)) drho.
inline double bump_moment(int k) {
  const Rule1D g = gauss_legendre(96, 0.0, 1.0);
  double s = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double r = g.nodes[i];
    s += g.weights[i] * std::pow(r, k) * std::exp(-1 / (1 - r * r));
  }
  return s;
}

} // namespace detail

/// Second moment int chi_eps(z) |z|^2 dz of the normalized bump kernel in R^4.
inline double mollifier_second_moment(double eps) { return eps * eps * detail::bump_moment(5) / detail::bump_moment(3); }

/// Convolution of the grid-sampled field (n = 1) with the bump kernel of radius eps.
/// Defined where the eps-ball stays inside the grid box.
inline ScalarField mollify(const ScalarField& u, double eps, const MollifyOptions& opt = {}) {
  if (u.n() != 1) throw dimension_error("mollify: only n = 1 is supported");
  if (opt.points < 2 || !(opt.half_width > 0)) throw precondition_error("mollify: bad grid");
  const double h = 2 * opt.half_width / (opt.points - 1);
  if (eps < 2 * h) throw precondition_error("mollify: eps must be at least two grid spacings");
  const double reach = opt.half_width - eps;
  if (reach <= 0) throw precondition_error("mollify: domain too small after shrinking by eps");

  struct Data {
    detail::Grid4 grid;
    double reach = 0;
    std::vector<Eigen::Vector4d> z;
    std::vector<double> w0;
    std::vector<Eigen::Vector4d> w1;
    std::vector<Eigen::Matrix4d> w2;
  };
  auto d = std::make_shared<Data>();
  d->reach = reach;
  d->grid.lo = -opt.half_width;
  d->grid.h = h;
  d->grid.m = opt.points;
  d->grid.v.resize(std::size_t(opt.points) * opt.points * opt.points * opt.points);
  {
    Vec x(4);
    std::size_t idx = 0;
    for (int a = 0; a < opt.points; ++a)
      for (int b = 0; b < opt.points; ++b)
        for (int c = 0; c < opt.points; ++c)
          for (int e = 0; e < opt.points; ++e, ++idx) {
            x << d->grid.lo + a * h, d->grid.lo + b * h, d->grid.lo + c * h, d->grid.lo + e * h;
            d->grid.v[idx] = u(x);
          }
  }
  // chi(z) = C phi(s), s = |z|^2/eps^2, with derivatives applied to the kernel
  const double c = 1 / (std::pow(eps, 4) * sphere_area(4) * detail::bump_moment(3));
  const Rule1D radial = gauss_legendre(opt.radial_nodes, 0.0, eps);
  const SphereRule sph = sphere_rule(4, sphere_level_for(4, opt.sphere_nodes), opt.seed);
  double total = 0;
  for (std::size_t k = 0; k < radial.nodes.size(); ++k) {
    const double rho = radial.nodes[k], sv = rho * rho / (eps * eps);
    const double a = 1 / (1 - sv), phi = std::exp(-a);
    const double phi1 = -phi * a * a, phi2 = phi * (a * a * a * a - 2 * a * a * a);
    for (std::size_t s = 0; s < sph.size(); ++s) {
      const double w = radial.weights[k] * rho * rho * rho * sph.weights[s] * c;
      const Eigen::Vector4d z = rho * sph.nodes.col(s);
      d->z.push_back(z);
      d->w0.push_back(w * phi);
      d->w1.push_back(w * phi1 * 2 / (eps * eps) * z);
      d->w2.push_back(w * (phi2 * 4 / std::pow(eps, 4) * z * z.transpose() +
                           phi1 * 2 / (eps * eps) * Eigen::Matrix4d::Identity()));
      total += w * phi;
    }
  }
  for (double& w : d->w0) w /= total; // exact reproduction of constants

  // A local quadratic fitted to the samples is mollified exactly; the kernel rule only sees the remainder.
  const double m2 = mollifier_second_moment(eps) / 4;
  auto inside = [d](const Vec& x) {
    if (x.cwiseAbs().maxCoeff() > d->reach) throw precondition_error("mollify: point outside the shrunk domain");
  };
  auto remainder = [d](const Eigen::Vector4d& x, const detail::Grid4::Quadratic& q, std::size_t k) {
    const Eigen::Vector4d y = x - d->z[k];
    return d->grid(y.data()) - q(y);
  };
  return ScalarField::closed_form(
      1,
      [d, inside, remainder, m2](const Vec& x) {
        inside(x);
        const Eigen::Vector4d p(x[0], x[1], x[2], x[3]);
        const auto q = d->grid.quadratic_near(p.data());
        double s = q(p) + m2 * q.hess.trace() / 2;
        for (std::size_t k = 0; k < d->z.size(); ++k) s += d->w0[k] * remainder(p, q, k);
        return s;
      },
      [d, inside, remainder](const Vec& x) {
        inside(x);
        const Eigen::Vector4d p(x[0], x[1], x[2], x[3]);
        const auto q = d->grid.quadratic_near(p.data());
        Eigen::Vector4d g = q.g + q.hess * (p - q.anchor);
        for (std::size_t k = 0; k < d->z.size(); ++k) g += d->w1[k] * remainder(p, q, k);
        return Vec(g);
      },
      [d, inside, remainder](const Vec& x) {
        inside(x);
        const Eigen::Vector4d p(x[0], x[1], x[2], x[3]);
        const auto q = d->grid.quadratic_near(p.data());
        Eigen::Matrix4d hm = q.hess;
        for (std::size_t k = 0; k < d->z.size(); ++k) hm += d->w2[k] * remainder(p, q, k);
        return Mat(hm);
      });
}

/// Exact convolution of a polynomial field with the bump kernel of radius eps in R^{4n}:
/// sum_k eps^{2k} M_{2k} / (2^k k! d (d + 2) ... (d + 2k - 2)) Lap^k p, with M_{2k} the
/// normalized radial moments and Lap the Euclidean Laplacian.
inline ScalarField mollify_polynomial(const ScalarField& u, double eps) {
  if (!u.exact()) throw precondition_error("mollify_polynomial: field is not an exact polynomial");
  if (!(eps > 0)) throw precondition_error("mollify_polynomial: eps must be positive");
  const int d = u.dim();
  Polynomial term = *u.exact(), out = term;
  double scale = 1;
  for (int k = 1; term.degree() >= 2; ++k) {
    Polynomial lap;
    for (int i = 0; i < d; ++i) lap += term.derivative(i).derivative(i);
    term = lap;
    scale *= eps * eps / (2.0 * k * (d + 2 * (k - 1)));
    const double c = scale * detail::bump_moment(d - 1 + 2 * k) / detail::bump_moment(d - 1);
    out += Polynomial(Rational(c)) * term;
  }
  return ScalarField::polynomial(u.n(), out);
}

// ---- Bedford-Taylor convergence -------------------------------------------------

struct ConvergenceRow {
  std::size_t step = 0;
  double pairing = 0;
  double deviation = 0; // relative to the limit pairing when it is nonzero
};

struct ConvergenceReport {
  double limit = 0;
  std::vector<ConvergenceRow> rows;
  double final_deviation = 0;
  bool deviations_nonincreasing = true;
};

/// Pairings int psi Delta u^1_j ^ ... ^ Delta u^k_j ^ T over B(center, radius)
/// for k decreasing sequences, against the pairing of the limits. All steps
/// share one quadrature rule so that its error cancels in the deviations.
inline ConvergenceReport convergence_suite(const std::vector<std::vector<ScalarField>>& sequences,
                                           const std::vector<ScalarField>& limits, const RegularizedCurrent& t,
                                           const ScalarField& psi, const Point& center, double radius,
                                           const BallQuadrature& q) {
  const std::size_t k = sequences.size();
  if (k == 0 || limits.size() != k) throw precondition_error("convergence_suite: need one limit per sequence");
  const std::size_t steps = sequences.front().size();
  for (const auto& s : sequences)
    if (s.size() != steps || steps == 0) throw precondition_error("convergence_suite: sequences differ in length");
  const int n = t.n(), dim = 4 * n;
  if (t.codegree() != static_cast<int>(k)) throw dimension_error("convergence_suite: degrees do not reach the top");

  const SphereRule probe = sphere_rule(dim, 0, q.seed);
  std::vector<Point> samples{center};
  for (double f : {0.25, 0.5, 0.75})
    for (std::size_t j = 0; j < probe.size(); ++j) samples.push_back(center + f * radius * probe.nodes.col(j));
  for (const auto& s : sequences)
    for (std::size_t j = 0; j + 1 < steps; ++j)
      for (const auto& x : samples) {
        const double a = s[j](x), b = s[j + 1](x);
        if (b > a + 1e-9 * (1 + std::abs(a))) throw precondition_error("convergence_suite: sequence is not decreasing");
      }

  const Rule1D radial = radial_rule(0, radius, q.radial_nodes, dim);
  const SphereRule sph = sphere_rule(dim, sphere_level_for(dim, q.sphere_nodes), q.seed);
  auto pairing = [&](const std::vector<ScalarField>& us) {
    return integrate_product(
        [&](const Point& x) {
          const double w = psi(x);
          if (w == 0) return 0.0;
          std::vector<Eigen::MatrixXcd> slots;
          for (const auto& u : us) slots.push_back(delta_matrix_from_hessian(n, u.hessian(x)));
          return w * top_pairing(n, t.degree(), t.coefficients(x), slots).real();
        },
        center, radial, sph, q.jobs);
  };
  ConvergenceReport rep;
  rep.limit = pairing(limits);
  const double scale = rep.limit != 0 ? std::abs(rep.limit) : 1.0;
  for (std::size_t j = 0; j < steps; ++j) {
    std::vector<ScalarField> us;
    for (const auto& s : sequences) us.push_back(s[j]);
    const double v = pairing(us);
    rep.rows.push_back({j, v, std::abs(v - rep.limit) / scale});
    if (j > 0 && rep.rows[j].deviation > rep.rows[j - 1].deviation) rep.deviations_nonincreasing = false;
  }
  rep.final_deviation = rep.rows.back().deviation;
  return rep;
}

} // namespace qma
