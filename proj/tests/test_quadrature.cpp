#include <gtest/gtest.h>

#include <cmath>

#include "qma/quadrature.hpp"

using namespace qma;

TEST(GaussLegendre, ExactForPolynomialsOfDegreeTwoMMinusOne) {
  for (int m : {1, 2, 5, 16, 48}) {
    const Rule1D g = gauss_legendre(m, 0.0, 2.0);
    for (int k = 0; k <= 2 * m - 1; ++k) {
      double s = 0;
      for (int i = 0; i < m; ++i) s += g.weights[i] * std::pow(g.nodes[i], k);
      EXPECT_NEAR(s, std::pow(2.0, k + 1) / (k + 1), 1e-12 * std::pow(2.0, k + 1)) << m << " " << k;
    }
  }
  EXPECT_THROW(gauss_legendre(0), precondition_error);
}

TEST(RadialRule, WeightsAndSingularIntegrands) {
  for (int d : {4, 8}) {
    const Rule1D r = radial_rule(0, 1.5, 64, d);
    double s = 0;
    for (double w : r.weights) s += w;
    EXPECT_NEAR(s, std::pow(1.5, d) / d, 1e-13);
    for (double x : r.nodes) EXPECT_GT(x, 0);
  }
  // int_0^1 rho^{-2} rho^3 = 1/2
  const Rule1D r = radial_rule(0, 1, 64, 4);
  double s = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] / (r.nodes[i] * r.nodes[i]);
  EXPECT_NEAR(s, 0.5, 1e-13);
  const Rule1D b = radial_rule(0.5, 1, 16, 4, {0.7, 0.2, 3.0});
  double t = 0;
  for (double w : b.weights) t += w;
  EXPECT_NEAR(t, (1 - std::pow(0.5, 4)) / 4, 1e-14);
  EXPECT_THROW(radial_rule(1, 0.5, 8, 4), precondition_error);
}

TEST(SphereRule, AreasAndMoments) {
  for (int d : {4, 8})
    for (int level = 0; level < sphere_level_count(); ++level) {
      if (d == 8 && level == 3) continue; // large; covered by the size table
      const SphereRule s = sphere_rule(d, level, 7);
      ASSERT_EQ(s.size(), sphere_rule_size(d, level));
      const double area = sphere_area(d);
      double a = 0, x2 = 0, x4 = 0, x2y2 = 0, odd = 0, unit = 0;
      for (std::size_t k = 0; k < s.size(); ++k) {
        const auto x = s.nodes.col(k);
        const double w = s.weights[k];
        a += w;
        x2 += w * x[0] * x[0];
        x4 += w * std::pow(x[1], 4);
        x2y2 += w * x[0] * x[0] * x[d - 1] * x[d - 1];
        odd += w * x[0] * x[1] * x[2];
        unit = std::max(unit, std::abs(x.norm() - 1));
      }
      EXPECT_NEAR(a, area, 1e-12 * area);
      EXPECT_NEAR(x2, area / d, 1e-12 * area);
      EXPECT_NEAR(odd, 0, 1e-13 * area);
      EXPECT_LE(unit, 1e-14);
      if (level >= 1) {
        EXPECT_NEAR(x4, 3 * area / (d * (d + 2)), 1e-12 * area);
        EXPECT_NEAR(x2y2, area / (d * (d + 2)), 1e-12 * area);
      }
    }
  EXPECT_EQ(sphere_rule_size(8, 1), 7500u);
  EXPECT_EQ(sphere_level_for(8, 4096), 1);
  EXPECT_EQ(sphere_level_for(4, 2048), 2);
  EXPECT_EQ(sphere_level_for(4, 1u << 30), sphere_level_count() - 1);
  EXPECT_THROW(sphere_rule_size(6, 0), dimension_error);
}

TEST(BallIntegration, VolumesAndDeterminism) {
  BallQuadrature q;
  q.sphere_nodes = 256;
  for (int d : {4, 8}) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
    c[0] = 0.3;
    auto e = integrate_ball([](const Eigen::VectorXd&) { return 1.0; }, c, 0.7, q);
    EXPECT_NEAR(e.value, ball_volume(d, 0.7), 1e-12 * ball_volume(d, 0.7));
    EXPECT_LE(e.error, 1e-12 * ball_volume(d, 0.7));
    auto f = [&c](const Eigen::VectorXd& x) { return std::exp(x[0]) * (x - c).squaredNorm(); };
    BallQuadrature q1 = q, q3 = q;
    q3.jobs = 3;
    EXPECT_EQ(integrate_ball(f, c, 0.7, q1).value, integrate_ball(f, c, 0.7, q3).value);
  }
  // int_{B^4} |x|^{-2} = pi^2, an integrable singularity at the center
  auto s = integrate_ball([](const Eigen::VectorXd& x) { return 1 / x.squaredNorm(); }, Eigen::VectorXd::Zero(4), 1.0, q);
  EXPECT_NEAR(s.value, M_PI * M_PI, 1e-12);
  auto area = integrate_sphere([](const Eigen::VectorXd&) { return 1.0; }, Eigen::VectorXd::Zero(8), 2.0, q);
  EXPECT_NEAR(area.value, sphere_area(8) * std::pow(2.0, 7), 1e-12 * area.value);
  auto cx = integrate_ball([](const Eigen::VectorXd& x) { return std::complex<double>(x[0] * x[0], 1.0); },
                           Eigen::VectorXd::Zero(4), 1.0, q);
  EXPECT_NEAR(cx.value.real(), ball_volume(4, 1) / 6, 1e-13);
  EXPECT_NEAR(cx.value.imag(), ball_volume(4, 1), 1e-12);
}

TEST(BallIntegration, PeakedRadialDensityMatchesAntiderivative) {
  // 8 eps / (|x|^2 + eps)^3 over the unit ball in R^4 equals 4 pi^2 / (1 + eps)^2
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    auto e = integrate_ball(
        [eps](const Eigen::VectorXd& x) {
          const double s = x.squaredNorm() + eps;
          return 8 * eps / (s * s * s);
        },
        Eigen::VectorXd::Zero(4), 1.0, BallQuadrature{});
    const double exact = 4 * M_PI * M_PI / ((1 + eps) * (1 + eps));
    EXPECT_NEAR(e.value, exact, 1e-8 * exact) << eps;
  }
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, 4,
                            [](std::size_t i) {
                              if (i == 7) throw numerical_error("boom");
                            }),
               numerical_error);
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
}
