#pragma once
/// @file quadrature.hpp
/// Product quadrature on balls in R^4 and R^8: composite Gauss-Legendre in the
/// radius times exact-degree rules on S^3 and S^7, rotated by a seeded random
/// orthogonal matrix.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "qma/errors.hpp"

namespace qma {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre on [a, b] by Golub-Welsch.
inline Rule1D gauss_legendre(int m, double a = -1.0, double b = 1.0) {
  if (m < 1) throw precondition_error("gauss_legendre: need at least one node");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k < m; ++k) jac(k, k - 1) = jac(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  Rule1D r;
  for (int k = 0; k < m; ++k) {
    const double v = es.eigenvectors()(0, k);
    r.nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * es.eigenvalues()(k));
    r.weights.push_back((b - a) * v * v);
  }
  return r;
}

/// Nodes in (r0, r1] for integrals g(rho) rho^{d-1} drho; the weights carry rho^{d-1}.
/// Panels are geometric towards 0 when r0 = 0, uniform otherwise; extra break
/// points split the panel containing them.
inline Rule1D radial_rule(double r0, double r1, int nodes, int d, const std::vector<double>& breaks = {}) {
  if (nodes < 1) throw precondition_error("radial_rule: need at least one node");
  if (!(r0 >= 0 && r1 >= r0)) throw precondition_error("radial_rule: need 0 <= r0 <= r1");
  Rule1D out;
  if (r1 == r0) return out;
  const int panels = std::min(8, nodes);
  const int order = std::max(1, nodes / panels);
  std::vector<double> edges{r0, r1};
  for (int p = 1; p < panels; ++p)
    edges.push_back(r0 == 0 ? r1 * std::ldexp(1.0, -p) : r0 + (r1 - r0) * p / panels);
  for (double b : breaks)
    if (b > r0 && b < r1) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const Rule1D ref = gauss_legendre(order);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p], b = edges[p + 1];
    for (int k = 0; k < order; ++k) {
      const double rho = 0.5 * (a + b) + 0.5 * (b - a) * ref.nodes[k];
      out.nodes.push_back(rho);
      out.weights.push_back(0.5 * (b - a) * ref.weights[k] * std::pow(rho, d - 1));
    }
  }
  return out;
}

/// Unit-sphere rule; columns of `nodes` are points, weights sum to the area.
struct SphereRule {
  int dim = 0;
  Eigen::MatrixXd nodes;
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
};

namespace detail {

struct S3Level {
  int m, k;
};
struct S7Level {
  int m7, m3, k;
};
inline constexpr S3Level s3_levels[] = {{2, 4}, {4, 8}, {8, 16}, {16, 32}};
inline constexpr S7Level s7_levels[] = {{2, 1, 4}, {3, 2, 5}, {4, 2, 6}, {5, 3, 6}};
inline constexpr int sphere_level_count = 4;

/// Hopf coordinates: x = (sqrt(1-t) e^{i a}, sqrt(t) e^{i b}), dS = dt da db / 2.
inline SphereRule s3_product(int m, int k) {
  const Rule1D gt = gauss_legendre(m, 0.0, 1.0);
  SphereRule r;
  r.dim = 4;
  r.nodes.resize(4, m * k * k);
  const double h = 2 * M_PI / k;
  int c = 0;
  for (int i = 0; i < m; ++i) {
    const double t = gt.nodes[i], a = std::sqrt(1 - t), b = std::sqrt(t);
    for (int p = 0; p < k; ++p)
      for (int q = 0; q < k; ++q, ++c) {
        const double u = (p + 0.5) * h, v = (q + 0.5) * h;
        r.nodes.col(c) << a * std::cos(u), a * std::sin(u), b * std::cos(v), b * std::sin(v);
        r.weights.push_back(0.5 * gt.weights[i] * h * h);
      }
  }
  return r;
}

/// Join of two S^3 rules: x = (sqrt(t) u, sqrt(1-t) v), dS = t(1-t)/2 dt dS(u) dS(v).
inline SphereRule s7_product(int m7, int m3, int k) {
  const Rule1D gt = gauss_legendre(m7, 0.0, 1.0);
  const SphereRule s = s3_product(m3, k);
  const int ns = static_cast<int>(s.size());
  SphereRule r;
  r.dim = 8;
  r.nodes.resize(8, m7 * ns * ns);
  int c = 0;
  for (int i = 0; i < m7; ++i) {
    const double t = gt.nodes[i], a = std::sqrt(t), b = std::sqrt(1 - t);
    const double wt = 0.5 * t * (1 - t) * gt.weights[i];
    for (int p = 0; p < ns; ++p)
      for (int q = 0; q < ns; ++q, ++c) {
        r.nodes.col(c).head<4>() = a * s.nodes.col(p);
        r.nodes.col(c).tail<4>() = b * s.nodes.col(q);
        r.weights.push_back(wt * s.weights[p] * s.weights[q]);
      }
  }
  return r;
}

inline Eigen::MatrixXd random_rotation(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

} // namespace detail

inline int sphere_level_count() { return detail::sphere_level_count; }

inline std::size_t sphere_rule_size(int dim, int level) {
  if (level < 0 || level >= detail::sphere_level_count) throw precondition_error("sphere rule level out of range");
  if (dim == 4) {
    const auto l = detail::s3_levels[level];
    return std::size_t(l.m) * l.k * l.k;
  }
  if (dim == 8) {
    const auto l = detail::s7_levels[level];
    const std::size_t s = std::size_t(l.m3) * l.k * l.k;
    return l.m7 * s * s;
  }
  throw dimension_error("sphere rules exist for R^4 and R^8 only");
}

/// Smallest level with at least `nodes` points (the largest level if none).
inline int sphere_level_for(int dim, std::size_t nodes) {
  for (int l = 0; l < detail::sphere_level_count; ++l)
    if (sphere_rule_size(dim, l) >= nodes) return l;
  return detail::sphere_level_count - 1;
}

inline SphereRule sphere_rule(int dim, int level, std::uint64_t seed) {
  sphere_rule_size(dim, level);
  SphereRule r;
  if (dim == 4) {
    const auto l = detail::s3_levels[level];
    r = detail::s3_product(l.m, l.k);
  } else {
    const auto l = detail::s7_levels[level];
    r = detail::s7_product(l.m7, l.m3, l.k);
  }
  r.nodes = detail::random_rotation(dim, seed) * r.nodes;
  return r;
}

inline double sphere_area(int dim) { return 2 * std::pow(M_PI, dim / 2.0) / std::tgamma(dim / 2.0); }
inline double ball_volume(int dim, double r) { return sphere_area(dim) * std::pow(r, dim) / dim; }

/// Runs body(i) for i in [0, count) on up to `jobs` threads; results must be
/// written per index so that reductions stay independent of the thread count.
template <class Body>
void parallel_for(std::size_t count, int jobs, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1, jobs), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex m;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) body(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

struct BallQuadrature {
  int radial_nodes = 64;
  std::size_t sphere_nodes = 4096; // rounded up to the next available rule
  std::uint64_t seed = 0;
  int jobs = 1;
};

template <class T>
struct BasicEstimate {
  T value{};
  double error = 0;
};
using Estimate = BasicEstimate<double>;

/// sum_k w_k sum_s v_s f(c + rho_k theta_s), reduced in a fixed order.
template <class F>
auto integrate_product(F&& f, const Eigen::VectorXd& center, const Rule1D& radial, const SphereRule& sphere, int jobs) {
  using R = std::decay_t<decltype(f(center))>;
  if (center.size() != sphere.dim) throw dimension_error("integrate: center and sphere rule dimensions differ");
  std::vector<R> partial(radial.nodes.size(), R{});
  parallel_for(radial.nodes.size(), jobs, [&](std::size_t k) {
    R acc{};
    Eigen::VectorXd x(sphere.dim);
    for (std::size_t s = 0; s < sphere.size(); ++s) {
      x = center + radial.nodes[k] * sphere.nodes.col(s);
      acc += sphere.weights[s] * f(x);
    }
    partial[k] = radial.weights[k] * acc;
  });
  R total{};
  for (const R& p : partial) total += p;
  return total;
}

/// Integral over the shell r0 < |x - c| < r1 with an error estimate from
/// doubling the radial nodes and refining the sphere rule.
template <class F>
auto integrate_shell(F&& f, const Eigen::VectorXd& center, double r0, double r1, const BallQuadrature& q,
                     const std::vector<double>& breaks = {}) {
  using R = std::decay_t<decltype(f(center))>;
  const int dim = static_cast<int>(center.size());
  const int level = sphere_level_for(dim, q.sphere_nodes);
  const int fine = std::min(level + 1, sphere_level_count() - 1);
  const R coarse = integrate_product(f, center, radial_rule(r0, r1, q.radial_nodes, dim, breaks),
                                     sphere_rule(dim, level, q.seed), q.jobs);
  const R value = integrate_product(f, center, radial_rule(r0, r1, 2 * q.radial_nodes, dim, breaks),
                                    sphere_rule(dim, fine, q.seed ^ 0x9e3779b97f4a7c15ULL), q.jobs);
  return BasicEstimate<R>{value, std::abs(value - coarse)};
}

template <class F>
auto integrate_ball(F&& f, const Eigen::VectorXd& center, double r, const BallQuadrature& q,
                    const std::vector<double>& breaks = {}) {
  if (!(r > 0)) throw precondition_error("integrate_ball: radius must be positive");
  return integrate_shell(std::forward<F>(f), center, 0.0, r, q, breaks);
}

/// Integral over the sphere |x - c| = r.
template <class F>
auto integrate_sphere(F&& f, const Eigen::VectorXd& center, double r, const BallQuadrature& q) {
  using R = std::decay_t<decltype(f(center))>;
  const int dim = static_cast<int>(center.size());
  const int level = sphere_level_for(dim, q.sphere_nodes);
  const int fine = std::min(level + 1, sphere_level_count() - 1);
  Rule1D one{{r}, {std::pow(r, dim - 1)}};
  const R coarse = integrate_product(f, center, one, sphere_rule(dim, level, q.seed), q.jobs);
  const R value = integrate_product(f, center, one, sphere_rule(dim, fine, q.seed ^ 0x9e3779b97f4a7c15ULL), q.jobs);
  return BasicEstimate<R>{value, std::abs(value - coarse)};
}

} // namespace qma
