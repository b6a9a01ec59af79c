#pragma once
/// @file suites.hpp
/// Identity suites shared by the `verify` command and the acceptance driver.
/// Each row carries the worst deviation found and the tolerance it is held to;
/// exact suites count nonzero residue terms and use tolerance 0.

#include <random>
#include <string>
#include <vector>

#include "qma/fields.hpp"
#include "qma/monge_ampere.hpp"

namespace qma {

struct CheckRow {
  std::string suite, name;
  double deviation = 0;
  double tolerance = 0;
  bool passed() const { return deviation <= tolerance; }
};

namespace detail {

inline double inf_norm(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline std::size_t residue(const PolyForm& f) {
  std::size_t k = 0;
  for (const auto& [m, c] : f.terms()) k += c.terms().size();
  return k;
}

inline Vec random_ball_point(int n, std::mt19937_64& rng, double radius = 1.0) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  Vec x(4 * n);
  for (int i = 0; i < 4 * n; ++i) x[i] = g(rng);
  return x * (radius * std::pow(u(rng), 1.0 / (4 * n)) / x.norm());
}

} // namespace detail

/// tau is multiplicative on quaternions and matrices, commutes with J up to conjugation, and
/// maps unitary matrices to symplectic ones. Matrices have sizes 1..max_n.
inline std::vector<CheckRow> embedding_suite(int pairs, int matrices, int max_n, std::uint64_t seed,
                                             double tol = 1e-10) {
  std::mt19937_64 rng(seed);
  double scalar = 0, product = 0, conj = 0, sympl = 0;
  for (int t = 0; t < pairs; ++t) {
    const Quat a = random_quaternion(rng), b = random_quaternion(rng);
    scalar = std::max(scalar, detail::inf_norm(tau(a * b) - tau(a) * tau(b)));
  }
  for (int t = 0; t < matrices; ++t) {
    const int n = 1 + t % max_n;
    const QMat a = random_qmatrix(n, n, rng), b = random_qmatrix(n, n, rng);
    product = std::max(product, detail::inf_norm(tau(a * b) - tau(a) * tau(b)));
    const Eigen::MatrixXcd j = symplectic_j(n);
    conj = std::max(conj, detail::inf_norm(j * tau(a).conjugate() - tau(a) * j));
    const Eigen::MatrixXcd u = tau(random_unitary(n, rng));
    sympl = std::max(sympl, detail::inf_norm(u * j * u.transpose() - j));
  }
  return {{"embedding", "tau_scalar_product", scalar, tol},
          {"embedding", "tau_matrix_product", product, tol},
          {"embedding", "tau_j_conjugation", conj, tol},
          {"embedding", "tau_symplectic", sympl, tol}};
}

/// Exact operator identities on random polynomial forms with coefficients of the given degree.
inline std::vector<CheckRow> exact_identity_suite(int n, int trials, int degree, std::uint64_t seed) {
  if (n < 1 || n > 2) throw dimension_error("exact_identity_suite: n must be 1 or 2");
  std::mt19937_64 rng(seed);
  std::size_t sq0 = 0, sq1 = 0, anti = 0, leib = 0, closed = 0, chain = 0;
  for (int t = 0; t < trials; ++t) {
    const int p = t % (2 * n - 1);
    const PolyForm f = random_poly_form(n, p, degree, 3, rng);
    sq0 += detail::residue(d0(d0(f)));
    sq1 += detail::residue(d1(d1(f)));
    anti += detail::residue(d0(d1(f)) + d1(d0(f)));
    const PolyForm g = random_poly_form(n, 1, degree, 2, rng);
    for (int a = 0; a < 2; ++a) {
      const PolyForm second = wedge(f, d_alpha(g, a));
      const PolyForm rhs = p % 2 ? wedge(d_alpha(f, a), g) - second : wedge(d_alpha(f, a), g) + second;
      leib += detail::residue(d_alpha(wedge(f, g), a) - rhs);
    }
    std::vector<Polynomial> us;
    for (int i = 0; i < n; ++i) us.push_back(random_polynomial(n, degree, 6, rng, true));
    for (int k = 1; k <= n; ++k) {
      PolyForm prod = PolyForm::scalar(n, Polynomial(1)), rest = prod;
      for (int i = 0; i < k; ++i) prod = wedge(prod, laplace(n, us[i]));
      for (int i = 1; i < k; ++i) rest = wedge(rest, laplace(n, us[i]));
      closed += detail::residue(d0(prod)) + detail::residue(d1(prod));
      chain += detail::residue(prod - d0(wedge(d1(poly_scalar_form(n, us[0])), rest)));
      chain += detail::residue(prod - laplace(wedge(poly_scalar_form(n, us[0]), rest)));
    }
  }
  const std::string s = "exact_n" + std::to_string(n);
  return {{s, "d0_squared", double(sq0), 0},          {s, "d1_squared", double(sq1), 0},
          {s, "anticommutation", double(anti), 0},     {s, "leibniz", double(leib), 0},
          {s, "closedness", double(closed), 0},        {s, "factorization_chain", double(chain), 0}};
}

/// Exact anchors for the coordinate functions, |q|^2 and beta_n; n <= 2 for the
/// polynomial anchors, n <= 3 for the beta power.
inline std::vector<CheckRow> anchor_suite(int n) {
  if (n < 1 || n > 3) throw dimension_error("anchor_suite: n must be between 1 and 3");
  const std::string s = "anchors_n" + std::to_string(n);
  std::vector<CheckRow> rows;
  if (n <= 2) {
    std::size_t coord = 0, nq = 0;
    const Polynomial q2 = normsq_poly(n);
    for (int j = 0; j < 2 * n; ++j)
      for (int a = 0; a < 2; ++a) {
        for (int k = 0; k < 2 * n; ++k)
          for (int b = 0; b < 2; ++b) {
            Polynomial r = nabla(z_coord(k, b), j, a, n);
            if (j == k && a == b) r -= Polynomial(2);
            coord += r.terms().size();
          }
        Polynomial r = nabla(q2, j, a, n);
        r -= Polynomial(2) * z_coord(j, a).conj();
        nq += r.terms().size();
      }
    rows.push_back({s, "nabla_coordinates", double(coord), 0});
    rows.push_back({s, "nabla_normsq", double(nq), 0});
    rows.push_back({s, "laplace_normsq_is_8_beta",
                    double(detail::residue(laplace(n, q2) - Polynomial(8) * beta_n<Polynomial>(n))), 0});
  }
  using GExt = ExtElement<GaussRational>;
  const GExt diff = wedge_power(beta_n<GaussRational>(n), n) -
                    GaussRational(Rational(static_cast<long>(factorial(n)))) * omega_top<GaussRational>(n);
  rows.push_back({s, "beta_power_is_factorial_omega", double(diff.terms().size()), 0});
  return rows;
}

/// |Delta_n u - n! Moore(Hess u)| / |Delta_n u| over random hyperhermitian quadratics, and the
/// mixed version against the mixed discriminant.
inline std::vector<CheckRow> moore_suite(int n, int trials, std::uint64_t seed, double tol = 1e-9) {
  std::mt19937_64 rng(seed);
  double single = 0, mixed = 0;
  for (int t = 0; t < trials; ++t) {
    const ScalarField u = quadform(random_hyperhermitian(n, rng));
    const auto e = moore_equivalence_check(u, detail::random_ball_point(n, rng));
    single = std::max(single, e.deviation / std::max(std::abs(e.lhs), 1e-300));
    std::vector<ScalarField> us;
    for (int i = 0; i < n; ++i) us.push_back(quadform(random_hyperhermitian(n, rng)));
    const auto m = mixed_equivalence_check(us, detail::random_ball_point(n, rng));
    mixed = std::max(mixed, m.deviation / std::max(std::abs(m.lhs), 1e-300));
  }
  const std::string s = "moore_n" + std::to_string(n);
  return {{s, "ma_vs_moore", single, tol}, {s, "mixed_vs_discriminant", mixed, tol}};
}

/// ma_density of -1/(|q|^2 + eps) against 8^n n! eps / (|q|^2 + eps)^{2n+1} at random points of the unit ball.
inline CheckRow fundamental_pointwise_check(int n, double eps, int points, std::uint64_t seed, double tol = 1e-10) {
  std::mt19937_64 rng(seed);
  const ScalarField u = invshift(n, eps);
  double worst = 0;
  for (int t = 0; t < points; ++t) {
    const Vec x = detail::random_ball_point(n, rng);
    const double ref = fundamental_reference(n, eps, x);
    worst = std::max(worst, std::abs(ma_density(u, x) - ref) / ref);
  }
  char name[64];
  std::snprintf(name, sizeof name, "pointwise_eps_%g", eps);
  return {"fundamental_n" + std::to_string(n), name, worst, tol};
}

} // namespace qma
