#include <gtest/gtest.h>

#include <random>

#include "qma/currents.hpp"

using namespace qma;

namespace {

Vec random_point(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec x(4 * n);
  for (int i = 0; i < 4 * n; ++i) x[i] = u(rng);
  return x;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

BallQuadrature light() {
  BallQuadrature q;
  q.radial_nodes = 32;
  q.sphere_nodes = 512;
  return q;
}

} // namespace

TEST(FormBasis, SizesAndOrder) {
  for (int n = 1; n <= 3; ++n)
    for (int d = 0; d <= 2 * n; ++d) {
      const FormBasis& b = form_basis(n, d);
      EXPECT_EQ(b.masks.size(), binomial(2 * n, d));
      EXPECT_TRUE(std::is_sorted(b.masks.begin(), b.masks.end()));
    }
  EXPECT_THROW(form_basis(2, 5), dimension_error);
  EXPECT_THROW(RegularizedCurrent(2, 1, {}, "odd"), dimension_error);
}

TEST(BtProduct, NormSquaredAnchors) {
  std::mt19937_64 rng(41);
  for (int n = 1; n <= 2; ++n) {
    RegularizedCurrent t = laplace_current(normsq(n), "normsq");
    ASSERT_NE(t.exact(), nullptr);
    EXPECT_EQ(*t.exact(), Polynomial(8) * beta_n<Polynomial>(n));
    EXPECT_EQ(t.label(), "laplace(normsq)");
    RegularizedCurrent top = RegularizedCurrent::unit(n);
    for (int k = 0; k < n; ++k) top = bt_product(normsq(n), top);
    const Vec x = random_point(n, rng);
    EXPECT_NEAR(top.coefficients(x)[0].real(), factorial(n) * std::pow(8.0, n), 1e-12);
    // same through the pointwise path with a closed-form field
    RegularizedCurrent cf = RegularizedCurrent::unit(n);
    for (int k = 0; k < n; ++k) cf = bt_product(invshift(n, 1.0) - invshift(n, 1.0) + normsq(n), cf);
    EXPECT_EQ(cf.exact(), nullptr);
    EXPECT_NEAR(cf.coefficients(x)[0].real(), factorial(n) * std::pow(8.0, n), 1e-11);
    RegularizedCurrent lin = laplace_current(ScalarField::polynomial(n, Polynomial::var(1)));
    EXPECT_TRUE(lin.exact()->is_zero());
  }
  EXPECT_THROW(bt_product(normsq(1), beta_power(1, 1)), dimension_error);
  EXPECT_THROW(bt_product(normsq(1), RegularizedCurrent::unit(2)), dimension_error);
}

TEST(BtProduct, ClosednessPositivityAndMixedPairing) {
  std::mt19937_64 rng(42);
  const int n = 2;
  ScalarField c1 = ScalarField::polynomial(n, random_polynomial(n, 3, 6, rng, true));
  ScalarField c2 = ScalarField::polynomial(n, random_polynomial(n, 3, 6, rng, true));
  EXPECT_TRUE(is_closed(*laplace_product({c1, c2}).exact()));
  for (int t = 0; t < 10; ++t) {
    ScalarField u = quadform(random_psd_hyperhermitian(n, rng, 0.1));
    ScalarField v = invshift(n, 0.5) + quadform(random_psd_hyperhermitian(n, rng, 0.1));
    const Vec x = random_point(n, rng);
    EXPECT_TRUE(positivity_test(laplace_current(u)(x), 64, 500 + t).likely_positive);
    EXPECT_TRUE(positivity_test(laplace_current(v)(x), 64, 600 + t).likely_positive);
    RegularizedCurrent uv = bt_product(v, laplace_current(u));
    EXPECT_GE(uv.coefficients(x)[0].real(), -1e-9);
    const cd pair = top_pairing(n, 2, laplace_current(u).coefficients(x), {delta_matrix(v, x)});
    EXPECT_NEAR(pair.real(), mixed_ma({u, v}, x), 1e-9 * (1 + std::abs(pair)));
    EXPECT_NEAR(pair.real(), uv.coefficients(x)[0].real(), 1e-9 * (1 + std::abs(pair)));
  }
}

TEST(Mass, BetaWeightsAndClnNorm) {
  for (int n = 1; n <= 3; ++n)
    for (int p = 0; p <= n; ++p) {
      const Eigen::VectorXcd w = beta_weights(n, 2 * n - 2 * p);
      const Ext b = wedge_power(beta_n(n), n - p);
      const FormBasis& fb = form_basis(n, 2 * n - 2 * p);
      cd s = 0;
      for (std::size_t i = 0; i < fb.masks.size(); ++i) s += w[i] * b.coeff(fb.masks[i]);
      EXPECT_NEAR(s.real(), factorial(n), 1e-12) << n << " " << p;
    }
  BallQuadrature q = light();
  auto vol = cln_norm(RegularizedCurrent::constant(omega_top(1), "Omega"), Vec::Zero(4), 1.0, q);
  EXPECT_NEAR(vol.value, M_PI * M_PI / 2, 1e-12);
  for (int n = 1; n <= 2; ++n)
    for (int p = 0; p <= n; ++p) {
      Vec a = Vec::Zero(4 * n);
      a[0] = 0.25;
      const double r = 0.6;
      auto s = sigma_mass(beta_power(n, n - p), a, r, q);
      const double expect = factorial(n) * std::pow(M_PI, 2 * n) * std::pow(r, 4 * n) / factorial(2 * n);
      EXPECT_NEAR(s.value, expect, 1e-12 * expect);
      auto s3 = sigma_mass(beta_power(n, n - p).scaled(3.0), a, r, q);
      EXPECT_NEAR(s3.value, 3 * s.value, 1e-12 * expect);
    }
  EXPECT_EQ(sigma_mass(beta_power(2, 1).scaled(0.0), Vec::Zero(8), 1.0, q).value, 0.0);
  EXPECT_THROW(sigma_mass(beta_power(2, 1), Vec::Zero(8), 0.0, q), precondition_error);
}

TEST(Mass, FundamentalCurrentSigma) {
  BallQuadrature q = light();
  const RegularizedCurrent t = laplace_current(invshift(2, 0.0));
  for (double r : {0.1, 0.5, 1.0}) {
    auto s = sigma_mass(t, Vec::Zero(8), r, q);
    const double expect = 2 * std::pow(M_PI, 4) / 3 * std::pow(r, 4);
    EXPECT_NEAR(s.value, expect, 1e-10 * expect);
  }
}

TEST(Cln, RatioExamplesAndFamilyBound) {
  BallQuadrature q = light();
  auto r = cln_ratio({normsq(1)}, Vec::Zero(4), 0.5, 1.0, q);
  EXPECT_NEAR(r.ratio, M_PI * M_PI / 4, 1e-12);
  EXPECT_NEAR(r.sup_product, 1.0, 1e-12);
  auto r3 = cln_ratio({3.0 * normsq(1)}, Vec::Zero(4), 0.5, 1.0, q);
  EXPECT_NEAR(r3.ratio, r.ratio, 1e-12);
  EXPECT_NEAR(r3.norm, 3 * r.norm, 1e-11);
  // for psd quadratics the density is bounded by the normsq case scaled by top eigenvalues
  std::mt19937_64 rng(43);
  const double bound = cln_ratio({normsq(2), normsq(2)}, Vec::Zero(8), 0.5, 1.0, q).ratio;
  EXPECT_NEAR(bound, 128 * ball_volume(8, 0.5), 1e-10);
  for (int t = 0; t < 5; ++t) {
    auto rr = cln_ratio({quadform(random_psd_hyperhermitian(2, rng, 0.05)), quadform(random_psd_hyperhermitian(2, rng, 0.05))},
                        Vec::Zero(8), 0.5, 1.0, q);
    EXPECT_GT(rr.ratio, 0);
    EXPECT_LE(rr.ratio, bound * (1 + 1e-9));
  }
  EXPECT_THROW(cln_ratio({ScalarField::constant(1, 0.0)}, Vec::Zero(4), 0.5, 1.0, q), precondition_error);
  EXPECT_THROW(cln_ratio({normsq(1)}, Vec::Zero(4), 1.5, 1.0, q), precondition_error);
}

TEST(Lelong, FundamentalCurrentAndSmoothCurrents) {
  BallQuadrature q = light();
  std::vector<double> radii;
  for (int k = 1; k <= 6; ++k) radii.push_back(std::ldexp(1.0, -k));
  const double target = 2 * std::pow(M_PI, 4) / 3;
  auto f = lelong_number(laplace_current(invshift(2, 0.0)), Vec::Zero(8), radii, q);
  EXPECT_TRUE(f.monotone);
  EXPECT_NEAR(f.nu, target, 1e-8 * target);
  EXPECT_EQ(f.nu_radius, radii.back());
  for (double v : f.profile.values) EXPECT_NEAR(v, target, 1e-8 * target);

  auto b = lelong_number(beta_power(2, 1), Vec::Zero(8), radii, q);
  EXPECT_TRUE(b.monotone);
  EXPECT_LT(b.nu, 1e-5);
  for (std::size_t k = 1; k < radii.size(); ++k)
    EXPECT_NEAR(b.profile.values[k] / b.profile.values[k - 1], 16.0, 1e-9);

  Vec a = Vec::Zero(8);
  a[3] = 0.7;
  auto s = lelong_number(laplace_current(invshift(2, 0.0)), a, {0.01, 0.02, 0.04}, q);
  EXPECT_TRUE(s.monotone);
  EXPECT_LT(s.nu, 1e-3 * target);

  EXPECT_THROW(lelong_number(beta_power(2, 1), Vec::Zero(8), {0.1, 0.2, 0.5}, q), precondition_error);
  EXPECT_THROW(lelong_number(beta_power(2, 1), Vec::Zero(8), {}, q), precondition_error);
}

TEST(Lelong, RegularizedFamilyIsMonotone) {
  BallQuadrature q = light();
  for (double eps : {1e-1, 1e-2}) {
    auto r = lelong_number(laplace_current(invshift(2, eps)), Vec::Zero(8), {0.05, 0.1, 0.2, 0.4, 0.8}, q);
    EXPECT_TRUE(r.monotone) << eps;
    for (std::size_t k = 1; k < r.profile.values.size(); ++k) EXPECT_GE(r.profile.values[k], r.profile.values[k - 1]);
  }
}

TEST(Shell, IdentityOnSuiteCurrents) {
  BallQuadrature q = light();
  auto zero = shell_identity_check(beta_power(2, 1), Vec::Zero(8), 0.3, 0.3, q);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_EQ(zero.rhs, 0.0);
  auto b = shell_identity_check(beta_power(2, 1), Vec::Zero(8), 0.25, 0.75, q);
  EXPECT_NEAR(b.lhs, 2 * std::pow(M_PI, 4) / 3 * (std::pow(0.75, 4) - std::pow(0.25, 4)), 1e-10);
  EXPECT_LE(b.residual, 1e-4 * std::abs(b.lhs));
  auto e = shell_identity_check(laplace_current(invshift(2, 1e-2)), Vec::Zero(8), 0.1, 0.5, q);
  EXPECT_LE(e.residual, std::max(e.error, 1e-8 * std::abs(e.lhs)));
  EXPECT_GT(e.lhs, 0);
  Vec a = Vec::Zero(8);
  a[0] = 0.1;
  auto off = shell_identity_check(laplace_current(quadform(random_psd_hyperhermitian(2, *new std::mt19937_64(5), 0.1))), a,
                                  0.2, 0.6, q);
  EXPECT_LE(off.residual, std::max(off.error, 1e-8 * std::abs(off.lhs)));
  auto top = shell_identity_check(RegularizedCurrent::unit(2), Vec::Zero(8), 0.2, 0.6, q);
  EXPECT_NEAR(top.lhs, 0, 1e-9);
  EXPECT_NEAR(top.rhs, 0, 1e-9);
}

TEST(Stokes, IntegrationByParts) {
  // the bump edge needs a fine radial rule; the ball matches its support
  BallQuadrature q = light();
  q.radial_nodes = 128;
  q.sphere_nodes = 256;
  std::mt19937_64 rng(44);
  const Vec c = Vec::Zero(4);
  PolyForm tp = random_poly_form(1, 1, 2, 2, rng);
  FormField t = FormField::from_poly(tp);
  auto z = stokes_check(ScalarField::constant(1, 0.0), t, 0, c, 1.0, q);
  EXPECT_EQ(z.residual, 0.0);
  ScalarField h = ScalarField::polynomial(1, random_polynomial(1, 3, 10, rng, true)) * bump(1, c, 0.9);
  for (int alpha = 0; alpha < 2; ++alpha) {
    auto s = stokes_check(h, t, alpha, c, 0.9, q);
    EXPECT_LE(s.residual, 1e-6 * (1 + std::abs(s.lhs))) << alpha;
    EXPECT_GT(std::abs(s.lhs), 1e-3);
  }
  PolyForm closed(1, 1);
  closed.add(0b10, Polynomial(GaussRational(Rational(2), Rational(1))));
  auto cl = stokes_check(bump(1, c, 0.9), FormField::from_poly(closed), 1, c, 0.9, q);
  EXPECT_EQ(cl.lhs, cd(0));
  EXPECT_LE(std::abs(cl.rhs), 1e-10);
  EXPECT_THROW(stokes_check(ScalarField::constant(1, 1.0), t, 0, c, 1.0, q), precondition_error);
  EXPECT_THROW(stokes_check(h, FormField(1, 2), 0, c, 1.0, q), dimension_error);
  EXPECT_THROW(random_poly_form(1, 3, 2, 2, rng), dimension_error);
}

TEST(Mollify, ConstantsQuadraticsAndPsh) {
  MollifyOptions opt;
  const double h = 2 * opt.half_width / (opt.points - 1);
  const double eps = 0.3;
  ScalarField one = mollify(ScalarField::constant(1, 2.5), eps, opt);
  std::mt19937_64 rng(45);
  std::vector<Vec> pts;
  for (int t = 0; t < 10; ++t) pts.push_back(random_point(1, rng, 0.6));
  for (const auto& x : pts) EXPECT_NEAR(one(x), 2.5, 1e-13);
  ScalarField m = mollify(normsq(1), eps, opt);
  const double shift = mollifier_second_moment(eps) + 2 * h * h / 3;
  for (const auto& x : pts) {
    EXPECT_NEAR(m(x) - x.squaredNorm(), shift, 2e-3 * shift);
    EXPECT_LE((m.gradient(x) - 2 * x).norm(), 2e-3);
    EXPECT_LE((m.hessian(x) - 2 * Mat::Identity(4, 4)).cwiseAbs().maxCoeff(), 5e-2);
  }
  EXPECT_TRUE(psh_test(m, pts).consistent);
  EXPECT_THROW(mollify(normsq(1), h, opt), precondition_error);
  EXPECT_THROW(mollify(normsq(2), eps, opt), dimension_error);
  EXPECT_THROW(mollify(normsq(1), 1.1, opt), precondition_error);
  EXPECT_THROW(m(Vec::Constant(4, 0.8)), precondition_error);
}

TEST(Convergence, ShiftedAndMollifiedSequences) {
  BallQuadrature q;
  q.radial_nodes = 16;
  q.sphere_nodes = 256;
  const Vec c = Vec::Zero(4);
  const ScalarField psi = bump(1, c, 0.5);
  const RegularizedCurrent one = RegularizedCurrent::unit(1);
  std::vector<ScalarField> shifted;
  for (int j = 1; j <= 4; ++j) shifted.push_back(normsq(1) + ScalarField::constant(1, 1.0 / j));
  auto s = convergence_suite({shifted}, {normsq(1)}, one, psi, c, 0.5, q);
  EXPECT_EQ(s.final_deviation, 0.0);
  EXPECT_TRUE(s.deviations_nonincreasing);
  EXPECT_GT(s.limit, 0);

  std::vector<ScalarField> rising(shifted.rbegin(), shifted.rend());
  EXPECT_THROW(convergence_suite({rising}, {normsq(1)}, one, psi, c, 0.5, q), precondition_error);

  std::vector<ScalarField> moll;
  for (double eps : {0.5, 0.45, 0.4}) moll.push_back(mollify(normsq(1), eps));
  auto m = convergence_suite({moll}, {normsq(1)}, one, psi, c, 0.5, q);
  EXPECT_LE(m.final_deviation, 1e-4);
  EXPECT_EQ(m.rows.size(), 3u);
}

TEST(Mollify, PolynomialConvolutionIsExact) {
  std::mt19937_64 rng(61);
  const double eps = 0.3;
  const ScalarField quartic = normsq(1) * normsq(1);
  const ScalarField cubic = ScalarField::polynomial(1, random_polynomial(1, 3, 8, rng, true));
  const double c = 1 / (std::pow(eps, 4) * sphere_area(4) * detail::bump_moment(3));
  for (const ScalarField& u : {quartic, cubic, normsq(1)}) {
    const ScalarField m = mollify_polynomial(u, eps);
    ASSERT_NE(m.exact(), nullptr);
    for (int t = 0; t < 3; ++t) {
      const Vec x = Vec::Random(4) * 0.5;
      auto kernel = [&](const Point& z) {
        const double s = z.squaredNorm() / (eps * eps);
        return s < 1 ? c * std::exp(-1 / (1 - s)) * u(Point(x - z)) : 0.0;
      };
      Rule1D radial = gauss_legendre(160, 0.0, eps);
      for (std::size_t i = 0; i < radial.nodes.size(); ++i) radial.weights[i] *= std::pow(radial.nodes[i], 3);
      const double direct = integrate_product(kernel, Vec::Zero(4), radial, sphere_rule(4, 2, 5), 1);
      EXPECT_NEAR(m(x), direct, 1e-9 * (1 + std::abs(direct)));
    }
  }
  const ScalarField m2 = mollify_polynomial(normsq(1), eps);
  EXPECT_NEAR(m2(Vec::Zero(4)), mollifier_second_moment(eps), 1e-15);
  EXPECT_THROW(mollify_polynomial(invshift(1, 1.0), eps), precondition_error);
}
