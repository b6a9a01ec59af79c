#include <gtest/gtest.h>

#include <random>

#include "qma/calculus.hpp"
#include "qma/fields.hpp"

using namespace qma;

namespace {

Vec random_point(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec x(4 * n);
  for (int i = 0; i < 4 * n; ++i) x[i] = u(rng);
  return x;
}

Polynomial real_cubic(int n, std::mt19937_64& rng) { return random_polynomial(n, 3, 6, rng, true); }

} // namespace

TEST(Nabla, ExactAnchors) {
  for (int n = 1; n <= 2; ++n) {
    const Polynomial nq = normsq_poly(n);
    for (int j = 0; j < 2 * n; ++j)
      for (int a = 0; a < 2; ++a) {
        for (int k = 0; k < 2 * n; ++k)
          for (int b = 0; b < 2; ++b) {
            Polynomial expect = (j == k && a == b) ? Polynomial(2) : Polynomial();
            EXPECT_EQ(nabla(z_coord(k, b), j, a, n), expect);
          }
        EXPECT_EQ(nabla(nq, j, a, n), Polynomial(2) * z_coord(j, a).conj());
        EXPECT_TRUE(nabla(Polynomial(7), j, a, n).is_zero());
      }
  }
  EXPECT_THROW(nabla(normsq_poly(1), 2, 0, 1), precondition_error);
  EXPECT_THROW(nabla_stencil(0, 2), precondition_error);
}

TEST(Nabla, PointwiseMatchesExact) {
  std::mt19937_64 rng(21);
  const Polynomial p = real_cubic(2, rng);
  const ScalarField u = ScalarField::polynomial(2, p);
  for (int t = 0; t < 10; ++t) {
    Vec x = random_point(2, rng);
    for (int j = 0; j < 4; ++j)
      for (int a = 0; a < 2; ++a) EXPECT_LE(std::abs(nabla(u, j, a, x) - nabla(p, j, a, 2)(x)), 1e-12);
  }
  EXPECT_THROW(nabla(u, 4, 0, Vec::Zero(8)), precondition_error);
  EXPECT_THROW(u(Vec::Zero(4)), dimension_error);
}

TEST(Delta, NormSquaredPattern) {
  std::mt19937_64 rng(22);
  for (int n = 1; n <= 2; ++n) {
    const ScalarField u = normsq(n);
    const Vec x = random_point(n, rng);
    for (int i = 0; i < 2 * n; ++i)
      for (int j = 0; j < 2 * n; ++j) {
        cd expect = 0;
        if (i % 2 == 0 && j == i + 1) expect = 4;
        if (j % 2 == 0 && i == j + 1) expect = -4;
        EXPECT_LE(std::abs(delta_ij(u, i, j, x) - expect), 1e-14);
      }
  }
}

TEST(Delta, AntisymmetryAndInverseNormFormula) {
  std::mt19937_64 rng(23);
  for (int n = 1; n <= 2; ++n) {
    const ScalarField u = invshift(n, 0.0);
    for (int t = 0; t < 20; ++t) {
      Vec x = random_point(n, rng);
      const double r2 = x.squaredNorm();
      Eigen::MatrixXcd d = delta_matrix(u, x);
      for (int i = 0; i < 2 * n; ++i)
        for (int j = 0; j < 2 * n; ++j) {
          EXPECT_LE(std::abs(d(i, j) + d(j, i)), 1e-12);
          const cd m = z_coord(i, 0)(x) * z_coord(j, 1)(x) - z_coord(i, 1)(x) * z_coord(j, 0)(x);
          double kron = 0;
          if (i % 2 == 0 && j == i + 1) kron = 1;
          if (j % 2 == 0 && i == j + 1) kron = -1;
          const cd expect = -4.0 / (r2 * r2 * r2) * (std::conj(m) - kron * r2);
          EXPECT_LE(std::abs(d(i, j) - expect), 1e-10 * (1 + std::abs(expect))) << i << "," << j;
        }
    }
  }
  EXPECT_THROW(invshift(1, 0.0)(Vec::Zero(4)), pole_error);
}

TEST(Laplace, NormSquaredIsEightBeta) {
  for (int n = 1; n <= 2; ++n) {
    PolyForm l = laplace(n, normsq_poly(n));
    EXPECT_EQ(l, Polynomial(8) * beta_n<Polynomial>(n));
  }
}

TEST(Laplace, OneDimensionalCaseIsEuclideanLaplacian) {
  std::mt19937_64 rng(24);
  for (int t = 0; t < 5; ++t) {
    Polynomial p = real_cubic(1, rng);
    PolyForm l = laplace(1, p);
    Polynomial lap;
    for (int i = 0; i < 4; ++i) lap += p.derivative(i).derivative(i);
    EXPECT_EQ(l.coeff(0b11), lap);
  }
}

TEST(Operators, ExactIdentities) {
  std::mt19937_64 rng(25);
  for (int n = 1; n <= 2; ++n)
    for (int p = 0; p <= 2; ++p) {
      PolyForm f = random_poly_form(n, p, 3, 3, rng);
      EXPECT_TRUE(d0(d0(f)).is_zero());
      EXPECT_TRUE(d1(d1(f)).is_zero());
      EXPECT_EQ(d0(d1(f)), -d1(d0(f)));
      PolyForm g = random_poly_form(n, 1, 2, 2, rng);
      for (int a = 0; a < 2; ++a) {
        PolyForm lhs = d_alpha(wedge(f, g), a);
        PolyForm rhs = wedge(d_alpha(f, a), g);
        PolyForm second = wedge(f, d_alpha(g, a));
        rhs = p % 2 ? rhs - second : rhs + second;
        EXPECT_EQ(lhs, rhs);
      }
    }
}

TEST(Operators, ClosednessAndFactorizationChain) {
  std::mt19937_64 rng(26);
  for (int n = 1; n <= 2; ++n) {
    std::vector<Polynomial> us;
    for (int i = 0; i < n; ++i) us.push_back(real_cubic(n, rng));
    for (int k = 1; k <= n; ++k) {
      PolyForm prod = PolyForm::scalar(n, Polynomial(1));
      for (int i = 0; i < k; ++i) prod = wedge(prod, laplace(n, us[i]));
      EXPECT_TRUE(is_closed(prod));
      PolyForm rest = PolyForm::scalar(n, Polynomial(1));
      for (int i = 1; i < k; ++i) rest = wedge(rest, laplace(n, us[i]));
      PolyForm chain1 = d0(wedge(d1(poly_scalar_form(n, us[0])), rest));
      PolyForm chain2 = laplace(wedge(poly_scalar_form(n, us[0]), rest));
      EXPECT_EQ(prod, chain1);
      EXPECT_EQ(prod, chain2);
    }
  }
}

TEST(FormField, ClosednessBySampling) {
  std::mt19937_64 rng(27);
  std::vector<Vec> pts;
  for (int t = 0; t < 5; ++t) pts.push_back(random_point(2, rng));
  FormField lap = FormField::from_poly(laplace(2, real_cubic(2, rng)));
  EXPECT_TRUE(is_closed(lap, pts));

  PolyForm x0w0(1, 1);
  x0w0.add(0b1, Polynomial::var(0));
  std::vector<Vec> pts1{random_point(1, rng)};
  EXPECT_FALSE(is_closed(x0w0));
  EXPECT_FALSE(is_closed(FormField::from_poly(x0w0), pts1));
  PolyForm c(1, 2);
  c.add(0b11, Polynomial(GaussRational(Rational(3), Rational(-1))));
  EXPECT_TRUE(is_closed(c));
  EXPECT_TRUE(is_closed(FormField::from_poly(c), pts1));

  PolyForm f = random_poly_form(2, 1, 3, 3, rng);
  FormField ff = FormField::from_poly(f);
  for (const auto& x : pts)
    for (int a = 0; a < 2; ++a) EXPECT_LE(max_abs(ff.d_alpha_at(a, x) - evaluate(d_alpha(f, a), x)), 1e-10);
}

TEST(ScalarField, OracleOrderAndArithmetic) {
  ScalarField v = ScalarField::closed_form(1, [](const Vec& x) { return x.sum(); });
  EXPECT_THROW(v.gradient(Vec::Zero(4)), precondition_error);
  EXPECT_THROW(v.hessian(Vec::Zero(4)), precondition_error);
  std::mt19937_64 rng(28);
  Polynomial p = real_cubic(1, rng);
  ScalarField a = ScalarField::polynomial(1, p);
  ScalarField b = invshift(1, 0.5);
  ScalarField prod = a * b;
  ScalarField fd = ScalarField::black_box(1, [a, b](const Vec& x) { return a(x) * b(x); }, 1e-4);
  Vec x = random_point(1, rng);
  EXPECT_LE((prod.hessian(x) - fd.hessian(x)).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LE((prod.gradient(x) - fd.gradient(x)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ((a + a).kind(), ScalarField::Kind::exact_polynomial);
  EXPECT_EQ((a - b).kind(), ScalarField::Kind::closed_form);
  EXPECT_THROW(ScalarField::polynomial(3, Polynomial(1)), dimension_error);
  EXPECT_THROW(ScalarField::polynomial(1, Polynomial::var(5)), precondition_error);
}

TEST(ScalarField, FiniteDifferencesConvergeQuadratically) {
  std::mt19937_64 rng(29);
  ScalarField exact = invshift(1, 0.5);
  Vec x = random_point(1, rng, 0.5);
  auto err = [&](double h) {
    ScalarField bb = ScalarField::black_box(1, [exact](const Vec& y) { return exact(y); }, h);
    return (bb.hessian(x) - exact.hessian(x)).cwiseAbs().maxCoeff();
  };
  const double e1 = err(1e-2), e2 = err(5e-3);
  EXPECT_LT(e2, e1 / 3.0);
  ScalarField def = ScalarField::black_box(1, [exact](const Vec& y) { return exact(y); });
  EXPECT_LE((def.hessian(x) - exact.hessian(x)).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(ChangeOfVariables, ChainRuleAndInvariance) {
  std::mt19937_64 rng(30);
  for (int n = 1; n <= 2; ++n) {
    std::vector<Vec> pts;
    for (int t = 0; t < 5; ++t) pts.push_back(random_point(n, rng));
    EXPECT_LE(change_of_variables_check(normsq(n), QMat::identity(n), pts), 1e-14);
    EXPECT_LE(change_of_variables_check(normsq(n), random_unitary(n, rng), pts), 1e-10);
    ScalarField cubic = ScalarField::polynomial(n, real_cubic(n, rng));
    EXPECT_LE(change_of_variables_check(cubic, random_qmatrix(n, n, rng), pts), 1e-9);
    QMat sing(n, n);
    EXPECT_THROW(change_of_variables_check(cubic, sing, pts), precondition_error);
  }
}
