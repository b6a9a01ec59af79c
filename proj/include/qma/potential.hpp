#pragma once
/// @file potential.hpp
/// Sublevel sets B(r) = {phi < r} of an exhaustion function, the boundary
/// measure on the level set S(r) = {phi = r} and the Lelong-Jensen formula.
///
/// Sublevel sets are assumed star-shaped about a center point at which phi is
/// minimal. Integrals over them use polar coordinates about that center with
/// the radial limit found per direction; spherical level sets (phi a positive
/// multiple of |x - c|^2 plus a constant) are detected and use the exact rules.

#include <cmath>
#include <optional>
#include <vector>

#include "qma/monge_ampere.hpp"
#include "qma/quadrature.hpp"

namespace qma {

class Exhaustion {
public:
  /// Without a center, phi must be an exact spherical quadratic.
  explicit Exhaustion(ScalarField phi, std::optional<Vec> center = {}, double max_radius = 1e3)
      : phi_(std::move(phi)), max_radius_(max_radius) {
    detect_sphere();
    if (center) {
      if (center->size() != phi_.dim()) throw dimension_error("Exhaustion: center has wrong dimension");
      if (!sphere_) center_ = *center;
    } else if (!sphere_) {
      throw precondition_error("Exhaustion: a star center is required unless phi is a spherical quadratic");
    }
    minimum_ = phi_(center_);
    if (!std::isfinite(minimum_)) throw precondition_error("Exhaustion: phi is not finite at the center");
  }

  const ScalarField& phi() const { return phi_; }
  int n() const { return phi_.n(); }
  int dim() const { return phi_.dim(); }
  const Vec& center() const { return center_; }
  bool spherical() const { return sphere_.has_value(); }
  double minimum() const { return minimum_; }

  /// Distance from the center to the level set {phi = t} along the unit direction dir.
  double radius(double t, const Vec& dir) const {
    if (t <= minimum_) return 0;
    if (sphere_) return std::sqrt((t - minimum_) / sphere_->scale);
    auto f = [&](double rho) { return phi_(Vec(center_ + rho * dir)) - t; };
    double lo = 0, hi = 1;
    while (f(hi) <= 0) {
      lo = hi;
      hi *= 2;
      if (hi > max_radius_) throw numerical_error("Exhaustion: sublevel set is unbounded along a ray");
    }
    for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }

  /// psh_test on the given points; throws when a sample has a negative Hessian direction.
  void check_psh(const std::vector<Point>& samples) const {
    if (!psh_test(phi_, samples).consistent) throw precondition_error("Exhaustion: phi is not plurisubharmonic at a sample");
  }

private:
  struct Sphere {
    double scale;
  };

  void detect_sphere() {
    const Polynomial* p = phi_.exact();
    if (!p || p->degree() != 2) return;
    const Vec zero = Vec::Zero(dim());
    const Mat h = phi_.hessian(zero);
    const double s = h(0, 0) / 2;
    if (!(s > 0) || (h - 2 * s * Mat::Identity(dim(), dim())).cwiseAbs().maxCoeff() > 1e-14 * s) return;
    sphere_ = Sphere{s};
    center_ = -phi_.gradient(zero) / (2 * s);
  }

  ScalarField phi_;
  Vec center_;
  double minimum_ = 0;
  double max_radius_;
  std::optional<Sphere> sphere_;
};

namespace detail {

/// One polar quadrature pass over {t0 < phi < t1}; level_breaks split the radial panels.
template <class F>
auto sublevel_pass(F& f, const Exhaustion& ex, double t0, double t1, int radial_nodes, int level, std::uint64_t seed,
                   int jobs, const std::vector<double>& level_breaks) {
  using R = std::decay_t<decltype(f(ex.center()))>;
  const int d = ex.dim();
  const SphereRule sph = sphere_rule(d, level, seed);
  std::vector<double> inner;
  for (double b : level_breaks)
    if (b > std::max(t0, ex.minimum()) && b < t1) inner.push_back(b);
  std::sort(inner.begin(), inner.end());
  if (ex.spherical()) {
    const Vec dir = Vec::Unit(d, 0);
    std::vector<double> breaks;
    for (double b : inner) breaks.push_back(ex.radius(b, dir));
    return integrate_product(f, ex.center(),
                             radial_rule(ex.radius(t0, dir), ex.radius(t1, dir), radial_nodes, d, breaks), sph, jobs);
  }
  const int panels = static_cast<int>(inner.size()) + 1;
  const Rule1D ref = gauss_legendre(std::max(4, radial_nodes / panels), 0.0, 1.0);
  std::vector<R> partial(sph.size(), R{});
  parallel_for(sph.size(), jobs, [&](std::size_t s) {
    const Vec dir = sph.nodes.col(s);
    std::vector<double> cuts{ex.radius(t0, dir)};
    for (double b : inner) cuts.push_back(ex.radius(b, dir));
    cuts.push_back(ex.radius(t1, dir));
    R acc{};
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      const double a = cuts[p], len = cuts[p + 1] - cuts[p];
      if (len <= 0) continue;
      for (std::size_t k = 0; k < ref.nodes.size(); ++k) {
        const double rho = a + len * ref.nodes[k];
        acc += ref.weights[k] * len * std::pow(rho, d - 1) * f(Vec(ex.center() + rho * dir));
      }
    }
    partial[s] = sph.weights[s] * acc;
  });
  R total{};
  for (const R& v : partial) total += v;
  return total;
}

} // namespace detail

/// Integral of f over {t0 < phi < t1}, with the same refinement error estimate as integrate_shell.
template <class F>
auto integrate_sublevel(F&& f, const Exhaustion& ex, double t0, double t1, const BallQuadrature& q,
                        const std::vector<double>& level_breaks = {}) {
  using R = std::decay_t<decltype(f(ex.center()))>;
  if (!(t1 > ex.minimum()) || !(t1 > t0)) throw precondition_error("integrate_sublevel: empty region");
  const int level = sphere_level_for(ex.dim(), q.sphere_nodes);
  const int fine = std::min(level + 1, sphere_level_count() - 1);
  const R coarse = detail::sublevel_pass(f, ex, t0, t1, q.radial_nodes, level, q.seed, q.jobs, level_breaks);
  const R value = detail::sublevel_pass(f, ex, t0, t1, 2 * q.radial_nodes, fine, q.seed ^ 0x9e3779b97f4a7c15ULL,
                                        q.jobs, level_breaks);
  return BasicEstimate<R>{value, std::abs(value - coarse)};
}

// ---- normal frame and boundary density ----------------------------------------

/// n_{j alpha} for the unit normal n = grad phi / |grad phi|, packed with the nabla stencils.
struct NormalFrame {
  Eigen::MatrixXcd n; // 2n x 2
  cd operator()(int j, int alpha) const { return n(j, alpha); }
};

inline NormalFrame normal_frame_from_gradient(int n, const Vec& g) {
  const double norm = g.norm();
  if (!(norm >= 1e-6)) throw degenerate_level_set("normal_frame: gradient vanishes on the level set");
  NormalFrame f{Eigen::MatrixXcd(2 * n, 2)};
  const Eigen::VectorXcd unit = (g / norm).cast<cd>();
  for (int j = 0; j < 2 * n; ++j)
    for (int a = 0; a < 2; ++a) f.n(j, a) = nabla_vector(n, j, a).cwiseProduct(unit).sum();
  return f;
}

inline NormalFrame normal_frame(const ScalarField& phi, const Point& x) {
  return normal_frame_from_gradient(phi.n(), phi.gradient(x));
}

/// Density of the boundary measure with respect to surface measure at a point of a level set:
/// the top coefficient of N ^ G ^ (laplace phi)^{n-1} with N = sum n_{i0} w^i, G = sum nabla_{j1} phi w^j.
inline double boundary_measure_density(const ScalarField& phi, const Point& x) {
  const int n = phi.n();
  const Vec g = phi.gradient(x);
  const NormalFrame nf = normal_frame_from_gradient(n, g);
  Ext normal(n, 1), grad(n, 1);
  for (int i = 0; i < 2 * n; ++i) {
    normal.add(Mask(1) << i, nf(i, 0));
    grad.add(Mask(1) << i, nabla_vector(n, i, 1).cwiseProduct(g.cast<cd>()).sum());
  }
  Ext acc = wedge(normal, grad);
  if (n > 1) {
    const Ext l = laplace_at(phi, x);
    for (int k = 1; k < n; ++k) acc = wedge(acc, l);
  }
  const cd top = top_coefficient(acc);
  const double scale = std::max(1.0, max_abs(acc));
  if (std::abs(top.imag()) > 1e-9 * scale) throw numerical_error("boundary_measure_density: density is not real");
  return top.real();
}

// ---- surface integrals ------------------------------------------------------------

/// Integral of f over the level set {phi = r} with respect to surface measure.
/// Spherical level sets use the exact sphere rule; otherwise the co-area shell
/// average (1/2d) int_{|phi - r| < d} f |grad phi| with Richardson extrapolation in d.
template <class F>
Estimate surface_integral(const Exhaustion& ex, double r, F&& f, const BallQuadrature& q, double rel_delta = 1e-2) {
  if (!(r > ex.minimum())) throw precondition_error("surface_integral: the level set is empty");
  if (ex.spherical()) {
    const double rho = ex.radius(r, Vec::Unit(ex.dim(), 0));
    return integrate_sphere([&](const Vec& x) { return double(f(x)); }, ex.center(), rho, q);
  }
  const double delta = rel_delta * (r - ex.minimum());
  if (!(delta > 0) || r - delta <= ex.minimum()) throw precondition_error("surface_integral: bad shell width");
  auto weighted = [&](const Vec& x) {
    const double g = ex.phi().gradient(x).norm();
    if (!(g >= 1e-6)) throw degenerate_level_set("surface_integral: gradient vanishes in the shell");
    return double(f(x)) * g;
  };
  auto shell = [&](double d) {
    const Estimate e = integrate_sublevel(weighted, ex, r - d, r + d, q, {r});
    return Estimate{e.value / (2 * d), e.error / (2 * d)};
  };
  const Estimate wide = shell(delta), narrow = shell(delta / 2);
  const double value = (4 * narrow.value - wide.value) / 3;
  return {value, std::abs(value - narrow.value) + narrow.error};
}

template <class F>
Estimate boundary_measure(const Exhaustion& ex, double r, F&& v, const BallQuadrature& q) {
  return surface_integral(
      ex, r, [&](const Vec& x) { return double(v(x)) * boundary_measure_density(ex.phi(), x); }, q);
}

/// int_{B(r)} f (laplace phi)^n
template <class F>
Estimate sublevel_ma_integral(const Exhaustion& ex, double r, F&& f, const BallQuadrature& q) {
  return integrate_sublevel([&](const Vec& x) { return double(f(x)) * ma_density(ex.phi(), x); }, ex, ex.minimum(),
                            r, q);
}

struct MassIdentity {
  double boundary = 0, boundary_error = 0; // mu(1)
  double volume = 0, volume_error = 0;     // int_B (laplace phi)^n
  double deviation() const { return std::abs(boundary - volume); }
};

inline MassIdentity mass_identity(const Exhaustion& ex, double r, const BallQuadrature& q) {
  auto one = [](const Vec&) { return 1.0; };
  const Estimate b = boundary_measure(ex, r, one, q), v = sublevel_ma_integral(ex, r, one, q);
  return {b.value, b.error, v.value, v.error};
}

// ---- smoothed max{phi, r} ---------------------------------------------------------

namespace detail {

// G(s) on [-1, 1]: G(-1) = G'(-1) = 0, G(1) = G'(1) = 1, G'' = (15/16)(1 - s^2)^2 >= 0
inline double smax_g(double s) { return (7.5 * s * s - 2.5 * std::pow(s, 4) + 0.5 * std::pow(s, 6) + 8 * s + 2.5) / 16; }
inline double smax_g1(double s) { return (15 * s - 10 * s * s * s + 3 * std::pow(s, 5) + 8) / 16; }
inline double smax_g2(double s) { return 15.0 / 16 * (1 - s * s) * (1 - s * s); }

} // namespace detail

/// chi_l(phi) where chi_l(t) = r for t <= r - 1/l, t for t >= r + 1/l, a C^2 convex blend in between.
inline ScalarField smooth_max_family(const ScalarField& phi, double r, double l) {
  if (!(l >= 1)) throw precondition_error("smooth_max_family: l must be at least 1");
  struct Chi {
    double v, d1, d2;
  };
  auto chi = [r, l](double t) -> Chi {
    const double s = l * (t - r);
    if (s <= -1) return {r, 0, 0};
    if (s >= 1) return {t, 1, 0};
    return {r + detail::smax_g(s) / l, detail::smax_g1(s), l * detail::smax_g2(s)};
  };
  return ScalarField::closed_form(
      phi.n(), [phi, chi](const Vec& x) { return chi(phi(x)).v; },
      [phi, chi](const Vec& x) { return Vec(chi(phi(x)).d1 * phi.gradient(x)); },
      [phi, chi](const Vec& x) {
        const Chi c = chi(phi(x));
        const Vec g = phi.gradient(x);
        return Mat(c.d1 * phi.hessian(x) + c.d2 * g * g.transpose());
      });
}

/// int (laplace chi_l(phi))^n - int_{phi > r} (laplace phi)^n over B(r + 1/l); tends to mu(1) as l grows.
inline Estimate smooth_max_mass(const Exhaustion& ex, double r, double l, const BallQuadrature& q) {
  const ScalarField s = smooth_max_family(ex.phi(), r, l);
  auto f = [&](const Vec& x) {
    double v = ma_density(s, x);
    if (ex.phi()(x) > r) v -= ma_density(ex.phi(), x);
    return v;
  };
  return integrate_sublevel(f, ex, ex.minimum(), r + 1 / l, q, {r - 1 / l, r});
}

// ---- Lelong-Jensen ----------------------------------------------------------------

/// mu(V) - int_B V (laplace phi)^n = int_B (r - phi) laplace V ^ (laplace phi)^{n-1}
///                                 = int_{min phi}^r dt int_{B(t)} laplace V ^ (laplace phi)^{n-1}
struct JensenReport {
  double r = 0;
  double boundary = 0, volume = 0; // mu(V) and int_B V (laplace phi)^n
  double lhs = 0, rhs_spatial = 0, rhs_layered = 0;
  double lhs_error = 0, spatial_error = 0, layered_error = 0;

  double residual_spatial() const { return std::abs(lhs - rhs_spatial); }
  double residual_layered() const { return std::abs(lhs - rhs_layered); }
  double residual_rhs() const { return std::abs(rhs_spatial - rhs_layered); }
  /// Largest pairwise residual over the natural size of the terms.
  double relative_residual() const {
    const double scale = std::max({std::abs(boundary), std::abs(volume), std::abs(rhs_spatial), 1e-300});
    return std::max({residual_spatial(), residual_layered(), residual_rhs()}) / scale;
  }
};

inline JensenReport lelong_jensen(const Exhaustion& ex, const ScalarField& v, double r, const BallQuadrature& q,
                                  int layers = 48) {
  if (v.n() != ex.n()) throw dimension_error("lelong_jensen: V and phi live in different dimensions");
  if (!(r > ex.minimum())) throw precondition_error("lelong_jensen: the sublevel set is empty");
  {
    const SphereRule s = sphere_rule(ex.dim(), 0, q.seed);
    std::vector<Point> samples;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const Vec dir = s.nodes.col(k);
      const double rho = ex.radius(r, dir);
      samples.push_back(ex.center() + 0.5 * rho * dir);
      samples.push_back(ex.center() + rho * dir);
    }
    ex.check_psh(samples);
    if (!psh_test(v, samples).consistent) throw precondition_error("lelong_jensen: V is not plurisubharmonic");
  }
  std::vector<ScalarField> slots(ex.n(), ex.phi());
  slots[0] = v;
  auto mixed = [&](const Vec& x) { return mixed_ma(slots, x); };

  JensenReport rep;
  rep.r = r;
  const Estimate b = boundary_measure(ex, r, v, q);
  const Estimate vol = sublevel_ma_integral(ex, r, v, q);
  rep.boundary = b.value;
  rep.volume = vol.value;
  rep.lhs = b.value - vol.value;
  rep.lhs_error = b.error + vol.error;

  const Estimate sp = integrate_sublevel([&](const Vec& x) { return (r - ex.phi()(x)) * mixed(x); }, ex, ex.minimum(),
                                         r, q);
  rep.rhs_spatial = sp.value;
  rep.spatial_error = sp.error;

  // Layers keep the base sphere rule and double the radial nodes; the error adds the
  // radial refinement difference and the change against a half-size t rule.
  const int level = sphere_level_for(ex.dim(), q.sphere_nodes);
  auto layer = [&](double t, int nodes) {
    return detail::sublevel_pass(mixed, ex, ex.minimum(), t, nodes, level, q.seed, q.jobs, {});
  };
  auto layered = [&](int m, double* radial_error) {
    const Rule1D t = gauss_legendre(m, ex.minimum(), r);
    double s = 0;
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      const double fine = layer(t.nodes[k], 2 * q.radial_nodes);
      s += t.weights[k] * fine;
      if (radial_error) *radial_error += t.weights[k] * std::abs(fine - layer(t.nodes[k], q.radial_nodes));
    }
    return s;
  };
  double radial_error = 0;
  rep.rhs_layered = layered(layers, &radial_error);
  rep.layered_error = radial_error + std::abs(rep.rhs_layered - layered(std::max(1, layers / 2), nullptr));
  return rep;
}

/// Both sides of the formula are nondecreasing in r for nonnegative V; checked within error bars.
inline bool jensen_monotone(const std::vector<JensenReport>& reports) {
  for (std::size_t k = 1; k < reports.size(); ++k) {
    const auto& a = reports[k - 1];
    const auto& b = reports[k];
    if (b.r <= a.r) throw precondition_error("jensen_monotone: radii must increase");
    if (b.lhs < a.lhs - (a.lhs_error + b.lhs_error) - 1e-12 * std::abs(b.lhs)) return false;
    if (b.rhs_spatial < a.rhs_spatial - (a.spatial_error + b.spatial_error) - 1e-12 * std::abs(b.rhs_spatial))
      return false;
  }
  return true;
}

} // namespace qma
