#include <gtest/gtest.h>

#include <random>

#include "qma/exterior.hpp"

using namespace qma;

namespace {

using ER = ExtElement<GaussRational>;

ER random_rational_element(int n, int degree, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(-5, 5);
  ER e(n, degree);
  for (Mask m = 0; m < (Mask(1) << (2 * n)); ++m)
    if (std::popcount(m) == degree && rng() % 2) e.add(m, GaussRational(Rational(c(rng)), Rational(c(rng))));
  return e;
}

/// Random element with rho_j a = a and largest coefficient of modulus one.
Ext random_real_element(int n, int degree, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Ext e(n, degree);
  for (Mask m = 0; m < (Mask(1) << (2 * n)); ++m)
    if (std::popcount(m) == degree) e.add(m, cd(g(rng), g(rng)));
  Ext r = 0.5 * (e + rho_j(e));
  return cd(1.0 / max_abs(r)) * r;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

} // namespace

TEST(PermSign, Examples) {
  EXPECT_EQ(perm_sign({0, 1, 2, 3}, 4), 1);
  EXPECT_EQ(perm_sign({1, 0, 2, 3}, 4), -1);
  EXPECT_EQ(perm_sign({0, 0, 2, 3}, 4), 0);
  EXPECT_EQ(perm_sign({3, 2, 1, 0}, 4), 1);
  EXPECT_THROW(perm_sign({0, 4}, 4), precondition_error);
  EXPECT_THROW(perm_sign({-1}, 4), precondition_error);
}

TEST(Wedge, Examples) {
  Ext w0 = Ext::basis(2, 0), w1 = Ext::basis(2, 1);
  Ext a = wedge(w0, w1);
  EXPECT_EQ(a.terms().size(), 1u);
  EXPECT_EQ(a.coeff(0b11), cd(1));
  EXPECT_TRUE(wedge(w0, w0).is_zero());
  EXPECT_EQ(wedge(w1, w0).coeff(0b11), cd(-1));
  Ext b = beta_n(2);
  EXPECT_EQ(b.terms().size(), 2u);
  EXPECT_EQ(wedge(b, b), cd(2) * omega_top(2));
  EXPECT_THROW(wedge(Ext::basis(1, 0), Ext::basis(2, 0)), dimension_error);
  EXPECT_TRUE(wedge(omega_top(2), Ext::basis(2, 0)).is_zero());
}

TEST(Wedge, BetaPowerIsFactorialTimesTop) {
  EXPECT_EQ(beta_n(1), omega_top(1));
  for (int n = 1; n <= 5; ++n) {
    Ext p = wedge_power(beta_n(n), n);
    EXPECT_EQ(p, cd(factorial(n)) * omega_top(n)) << "n=" << n;
    EXPECT_EQ(top_coefficient(p), cd(factorial(n)));
  }
  using ER2 = ExtElement<GaussRational>;
  ER2 p = wedge_power(beta_n<GaussRational>(3), 3);
  EXPECT_EQ(top_coefficient(p), GaussRational(6));
}

TEST(Wedge, ExactGradedCommutativityAndAssociativity) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + t % 3;
    const int p = rng() % 3, q = rng() % 3, r = rng() % 2;
    ER a = random_rational_element(n, p, rng), b = random_rational_element(n, q, rng),
       c = random_rational_element(n, r, rng);
    ER ab = wedge(a, b), ba = wedge(b, a);
    if ((p * q) % 2) ba = -ba;
    EXPECT_EQ(ab, ba);
    EXPECT_EQ(wedge(wedge(a, b), c), wedge(a, wedge(b, c)));
  }
}

TEST(TopCoefficient, Examples) {
  EXPECT_EQ(top_coefficient(omega_top(3)), cd(1));
  EXPECT_EQ(top_coefficient(Ext(2, 4)), cd(0));
  EXPECT_THROW(top_coefficient(beta_n(2)), dimension_error);
}

TEST(RealStructure, Examples) {
  for (int n = 1; n <= 4; ++n) EXPECT_EQ(rho_j(beta_n(n)), beta_n(n));
  for (int i = 0; i < 4; ++i) {
    Ext e = Ext::basis(2, i, cd(0.3, -1.7));
    EXPECT_EQ(rho_j(rho_j(e)), -e);
  }
  Ext iw0 = Ext::basis(1, 0, cd(0, 1));
  Ext img = rho_j(iw0);
  EXPECT_EQ(img, Ext::basis(1, 1, cd(0, -1)));
  EXPECT_FALSE(is_real(iw0));
  EXPECT_TRUE(is_real(omega_top(2)));
  EXPECT_TRUE(is_real(wedge_power(beta_n(3), 2)));
}

TEST(RealStructure, CommutesWithQuaternionicMaps) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    LinearMapHtoH g{random_qmatrix(2, 2, rng)};
    for (int i = 0; i < 4; ++i) {
      Ext e = Ext::basis(2, i, cd(0.7, 0.2));
      EXPECT_LE(max_abs(rho_j(pullback(g, e)) - pullback(g, rho_j(e))), 1e-13);
    }
  }
}

TEST(Pullback, IdentityAndUnitaryInvariance) {
  std::mt19937_64 rng(13);
  Ext a = random_real_element(2, 2, rng);
  LinearMapHtoH id{QMat::identity(2)};
  EXPECT_LE(max_abs(pullback(id, a) - a), 1e-15);
  for (int n = 1; n <= 3; ++n) {
    LinearMapHtoH u{random_unitary(n, rng)};
    EXPECT_LE(max_abs(pullback(u, beta_n(n)) - beta_n(n)), 1e-12);
    EXPECT_LE(max_abs(pullback(u, omega_top(n)) - omega_top(n)), 1e-12);
  }
  LinearMapHtoH g{random_qmatrix(3, 2, rng)};
  EXPECT_THROW(pullback(g, beta_n(2)), dimension_error);
}

TEST(Pullback, IsAlgebraHomomorphism) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 10; ++t) {
    LinearMapHtoH g{random_qmatrix(3, 2, rng)};
    Ext a = random_real_element(3, 1, rng), b = random_real_element(3, 2, rng);
    EXPECT_LE(max_abs(pullback(g, wedge(a, b)) - wedge(pullback(g, a), pullback(g, b))), 1e-11);
  }
}

TEST(ElementarySp, Examples) {
  for (int n = 1; n <= 3; ++n) {
    std::vector<LinearMapHtoH> etas;
    for (int j = 0; j < n; ++j) etas.push_back(coordinate_functional(n, j));
    EXPECT_EQ(elementary_sp(etas), omega_top(n));
  }
  Ext e1 = elementary_sp({coordinate_functional(2, 0)});
  EXPECT_EQ(e1, wedge(Ext::basis(2, 0), Ext::basis(2, 1)));
  std::mt19937_64 rng(15);
  LinearMapHtoH eta = random_functional(2, rng);
  EXPECT_LE(max_abs(elementary_sp({eta, eta})), 1e-12);
  // right-linearly dependent functionals give zero as well
  LinearMapHtoH eta2{QMat(eta.matrix)};
  for (int c = 0; c < 2; ++c) eta2.matrix(0, c) = Quat{0.3, -1, 2, 0.5} * eta.matrix(0, c);
  EXPECT_LE(max_abs(elementary_sp({eta, eta2})), 1e-11);
  for (int t = 0; t < 20; ++t) {
    Ext s = elementary_sp({random_functional(3, rng), random_functional(3, rng)});
    EXPECT_TRUE(is_real(s, 1e-12 * max_abs(s)));
  }
  EXPECT_THROW(elementary_sp({coordinate_functional(1, 0), coordinate_functional(1, 0)}), precondition_error);
}

TEST(Positivity, Examples) {
  for (int n = 1; n <= 3; ++n) EXPECT_TRUE(positivity_test(beta_n(n), 256, 1).likely_positive);
  auto r = positivity_test(-omega_top(2), 16, 2);
  EXPECT_FALSE(r.likely_positive);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_LT(r.kappa.real(), 0);
  Ext c = wedge(beta_n(2), beta_n(2)) - cd(3) * omega_top(2);
  EXPECT_FALSE(positivity_test(c, 16, 3).likely_positive);
  auto nr = positivity_test(wedge(Ext::basis(1, 0, cd(0, 1)), Ext::basis(1, 1)), 4, 4);
  EXPECT_FALSE(nr.likely_positive);
  EXPECT_FALSE(nr.witness.has_value());
}

TEST(Positivity, SpanOfStronglyPositiveElementsIsFull) {
  std::mt19937_64 rng(16);
  for (int n = 1; n <= 2; ++n)
    for (int k = 1; k <= n; ++k) {
      std::vector<Mask> basis;
      for (Mask m = 0; m < (Mask(1) << (2 * n)); ++m)
        if (std::popcount(m) == 2 * k) basis.push_back(m);
      const int m = static_cast<int>(basis.size());
      Eigen::MatrixXcd rows(3 * m, m);
      for (int s = 0; s < 3 * m; ++s) {
        Ext e = random_sp(n, k, 1, rng);
        for (int c = 0; c < m; ++c) rows(s, c) = e.coeff(basis[c]);
      }
      Eigen::FullPivLU<Eigen::MatrixXcd> lu(rows);
      lu.setThreshold(1e-10);
      EXPECT_EQ(lu.rank(), m) << "n=" << n << " k=" << k;
    }
}

TEST(Positivity, ProductsAndPerturbations) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    Ext a = random_sp(3, 1, 2, rng), b = random_sp(3, 1, 2, rng);
    EXPECT_TRUE(positivity_test(wedge(a, b), 64, 100 + t).likely_positive);
  }
  for (int n = 1; n <= 2; ++n)
    for (int k = 1; k <= n; ++k) {
      const double eps = 1e-3 * factorial(k);
      for (int t = 0; t < 10; ++t) {
        Ext eta = random_real_element(n, 2 * k, rng);
        Ext bk = wedge_power(beta_n(n), k);
        EXPECT_TRUE(positivity_test(bk + cd(eps) * eta, 256, 200 + t).likely_positive);
        EXPECT_TRUE(positivity_test(bk - cd(eps) * eta, 256, 300 + t).likely_positive);
      }
    }
}
