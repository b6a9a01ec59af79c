#pragma once
/// @file exterior.hpp
/// Sparse exterior algebra over C^{2n} keyed by bitmask multi-indices.

#include <bit>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "qma/errors.hpp"
#include "qma/hamilton.hpp"
#include "qma/rational.hpp"

namespace qma {

using cd = std::complex<double>;
using Mask = std::uint32_t;

template <class C>
struct coeff_traits;

template <>
struct coeff_traits<cd> {
  static bool is_zero(const cd& c) { return std::abs(c) <= 1e-15; }
  static cd conj(const cd& c) { return std::conj(c); }
};

template <>
struct coeff_traits<GaussRational> {
  static bool is_zero(const GaussRational& c) { return c.is_zero(); }
  static GaussRational conj(const GaussRational& c) { return c.conj(); }
};

/// Sign of the permutation sorting `seq`; 0 on repeats. Entries must lie in [0, dim).
inline int perm_sign(const std::vector<int>& seq, int dim) {
  for (int v : seq)
    if (v < 0 || v >= dim) throw precondition_error("perm_sign: index out of range");
  int sign = 1;
  for (std::size_t a = 0; a < seq.size(); ++a)
    for (std::size_t b = a + 1; b < seq.size(); ++b) {
      if (seq[a] == seq[b]) return 0;
      if (seq[a] > seq[b]) sign = -sign;
    }
  return sign;
}

/// Sign of omega^A ^ omega^B relative to omega^{A|B}; A and B must be disjoint.
inline int wedge_sign(Mask a, Mask b) {
  int crossings = 0;
  while (b) {
    int j = std::countr_zero(b);
    b &= b - 1;
    crossings += std::popcount(a >> (j + 1));
  }
  return (crossings & 1) ? -1 : 1;
}

inline std::vector<int> mask_indices(Mask m) {
  std::vector<int> out;
  while (m) {
    out.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return out;
}

/// Element of the p-th exterior power of C^{2n} with coefficients in C.
template <class C>
class ExtElement {
public:
  using Traits = coeff_traits<C>;

  ExtElement() = default;
  ExtElement(int n, int degree) : n_(n), degree_(degree) {
    if (n < 1 || n > 8) throw dimension_error("ExtElement: n must be in [1, 8]");
    if (degree < 0) throw dimension_error("ExtElement: negative degree");
  }

  /// omega^i as a degree-1 element.
  static ExtElement basis(int n, int i, C c = C(1)) {
    ExtElement e(n, 1);
    if (i < 0 || i >= 2 * n) throw precondition_error("basis index out of range");
    e.add(Mask(1) << i, std::move(c));
    return e;
  }
  static ExtElement scalar(int n, C c) {
    ExtElement e(n, 0);
    e.add(0, std::move(c));
    return e;
  }

  int n() const { return n_; }
  int degree() const { return degree_; }
  int dim() const { return 2 * n_; }
  const std::map<Mask, C>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Coefficient of omega^I (zero if absent).
  C coeff(Mask m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? C(0) : it->second;
  }

  void add(Mask m, C c) {
    if (std::popcount(m) != degree_) throw dimension_error("ExtElement: multi-index length differs from degree");
    if (m >> dim()) throw precondition_error("ExtElement: index out of range");
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      if (!Traits::is_zero(c)) terms_.emplace(m, std::move(c));
    } else {
      it->second += c;
      if (Traits::is_zero(it->second)) terms_.erase(it);
    }
  }

  ExtElement& operator+=(const ExtElement& o) {
    check_same(o);
    for (const auto& [m, c] : o.terms_) add(m, c);
    return *this;
  }
  ExtElement& operator-=(const ExtElement& o) {
    check_same(o);
    for (const auto& [m, c] : o.terms_) add(m, C(-c));
    return *this;
  }
  friend ExtElement operator+(ExtElement a, const ExtElement& b) { return a += b; }
  friend ExtElement operator-(ExtElement a, const ExtElement& b) { return a -= b; }
  friend ExtElement operator-(const ExtElement& a) {
    ExtElement r(a.n_, a.degree_);
    for (const auto& [m, c] : a.terms_) r.terms_.emplace(m, C(-c));
    return r;
  }
  friend ExtElement operator*(const C& s, const ExtElement& a) {
    ExtElement r(a.n_, a.degree_);
    for (const auto& [m, c] : a.terms_) r.add(m, C(s * c));
    return r;
  }

  friend bool operator==(const ExtElement& a, const ExtElement& b) {
    return a.n_ == b.n_ && a.degree_ == b.degree_ && a.terms_ == b.terms_;
  }

  /// Applies f to every coefficient.
  template <class F>
  auto map(F&& f) const {
    using D = std::decay_t<decltype(f(std::declval<const C&>()))>;
    ExtElement<D> r(n_, degree_);
    for (const auto& [m, c] : terms_) r.add(m, f(c));
    return r;
  }

private:
  void check_same(const ExtElement& o) const {
    if (n_ != o.n_) throw dimension_error("ExtElement: ambient dimension mismatch");
    if (degree_ != o.degree_) throw dimension_error("ExtElement: degree mismatch");
  }

  int n_ = 1;
  int degree_ = 0;
  std::map<Mask, C> terms_;
};

using Ext = ExtElement<cd>;

template <class C>
ExtElement<C> wedge(const ExtElement<C>& a, const ExtElement<C>& b) {
  if (a.n() != b.n()) throw dimension_error("wedge: ambient dimension mismatch");
  ExtElement<C> r(a.n(), a.degree() + b.degree());
  if (a.degree() + b.degree() > 2 * a.n()) return r;
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) {
      if (ma & mb) continue;
      C prod = ca * cb;
      if (wedge_sign(ma, mb) < 0) prod = -prod;
      r.add(ma | mb, std::move(prod));
    }
  return r;
}

template <class C>
ExtElement<C> wedge_power(const ExtElement<C>& a, int k) {
  ExtElement<C> r = ExtElement<C>::scalar(a.n(), C(1));
  for (int i = 0; i < k; ++i) r = wedge(r, a);
  return r;
}

/// sum_l omega^{2l} ^ omega^{2l+1}
template <class C = cd>
ExtElement<C> beta_n(int n) {
  ExtElement<C> b(n, 2);
  for (int l = 0; l < n; ++l) b.add((Mask(1) << (2 * l)) | (Mask(1) << (2 * l + 1)), C(1));
  return b;
}

/// omega^0 ^ ... ^ omega^{2n-1}
template <class C = cd>
ExtElement<C> omega_top(int n) {
  ExtElement<C> o(n, 2 * n);
  o.add((Mask(1) << (2 * n)) - 1, C(1));
  return o;
}

template <class C>
C top_coefficient(const ExtElement<C>& a) {
  if (a.degree() != 2 * a.n()) throw dimension_error("top_coefficient: element is not of top degree");
  return a.coeff((Mask(1) << (2 * a.n())) - 1);
}

/// The real structure: z omega^k -> conj(z) J omega^k, applied factorwise.
template <class C>
ExtElement<C> rho_j(const ExtElement<C>& a) {
  ExtElement<C> r(a.n(), a.degree());
  for (const auto& [m, c] : a.terms()) {
    // omega^{2l} -> omega^{2l+1}, omega^{2l+1} -> -omega^{2l}
    std::vector<int> image;
    int sign = 1;
    for (int i : mask_indices(m)) {
      image.push_back(i ^ 1);
      if (i & 1) sign = -sign;
    }
    sign *= perm_sign(image, a.dim());
    Mask out = 0;
    for (int i : image) out |= Mask(1) << i;
    C v = coeff_traits<C>::conj(c);
    r.add(out, sign < 0 ? C(-v) : v);
  }
  return r;
}

inline bool is_real(const Ext& a, double tol = 1e-12) {
  Ext d = rho_j(a) - a;
  for (const auto& [m, c] : d.terms())
    if (std::abs(c) > tol) return false;
  return true;
}

inline bool is_real(const ExtElement<GaussRational>& a) { return (rho_j(a) - a).is_zero(); }

inline double max_abs(const Ext& a) {
  double m = 0;
  for (const auto& [k, c] : a.terms()) m = std::max(m, std::abs(c));
  return m;
}

/// Right H-linear map H^k -> H^n stored as an n x k quaternionic matrix.
struct LinearMapHtoH {
  QMat matrix;
  int target_dim() const { return matrix.rows(); }
  int source_dim() const { return matrix.cols(); }
};

/// g^* on forms: g^* w~^p = sum_j tau(g)_{pj} omega^j, extended multiplicatively.
inline Ext pullback(const LinearMapHtoH& g, const Ext& a) {
  if (g.target_dim() != a.n()) throw dimension_error("pullback: map target differs from form dimension");
  const int k = g.source_dim();
  const Eigen::MatrixXcd t = tau(g.matrix);
  std::vector<Ext> images;
  images.reserve(2 * a.n());
  for (int p = 0; p < 2 * a.n(); ++p) {
    Ext e(k, 1);
    for (int j = 0; j < 2 * k; ++j) e.add(Mask(1) << j, t(p, j));
    images.push_back(std::move(e));
  }
  Ext r(k, a.degree());
  if (a.degree() > 2 * k) return r;
  for (const auto& [m, c] : a.terms()) {
    Ext term = Ext::scalar(k, c);
    for (int i : mask_indices(m)) {
      term = wedge(term, images[i]);
      if (term.is_zero()) break;
    }
    if (!term.is_zero()) r += term;
  }
  return r;
}

/// eta_1^* w~^0 ^ eta_1^* w~^1 ^ ... for functionals eta_j: H^n -> H (1 x n matrices).
inline Ext elementary_sp(const std::vector<LinearMapHtoH>& etas) {
  if (etas.empty()) throw precondition_error("elementary_sp: need at least one functional");
  const int n = etas.front().source_dim();
  if (static_cast<int>(etas.size()) > n) throw precondition_error("elementary_sp: k exceeds n");
  Ext r = Ext::scalar(n, 1.0);
  const Ext w0 = Ext::basis(1, 0);
  const Ext w1 = Ext::basis(1, 1);
  for (const auto& eta : etas) {
    if (eta.target_dim() != 1 || eta.source_dim() != n)
      throw dimension_error("elementary_sp: functionals must map H^n to H");
    r = wedge(r, pullback(eta, w0));
    r = wedge(r, pullback(eta, w1));
  }
  return r;
}

inline LinearMapHtoH coordinate_functional(int n, int j) {
  QMat m(1, n);
  m(0, j) = Quat(1.0);
  return {m};
}

inline LinearMapHtoH random_functional(int n, std::mt19937_64& rng) { return {random_qmatrix(1, n, rng)}; }

/// Positive combination of `terms` random elementary strongly positive 2k-elements.
inline Ext random_sp(int n, int k, int terms, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(0.1, 1.0);
  Ext r(n, 2 * k);
  for (int t = 0; t < terms; ++t) {
    std::vector<LinearMapHtoH> etas;
    for (int j = 0; j < k; ++j) etas.push_back(random_functional(n, rng));
    r += cd(w(rng)) * elementary_sp(etas);
  }
  return r;
}

struct PositivityResult {
  bool likely_positive = false;
  std::optional<LinearMapHtoH> witness;  // empty when the input is not real
  cd kappa{0.0};
};

/// Sampled necessary test: g^* a = kappa Omega_{2k} must have kappa >= 0 for every
/// right H-linear g: H^k -> H^n. A LikelyPositive answer is not a certificate.
inline PositivityResult positivity_test(const Ext& a, int samples, std::uint64_t seed) {
  if (a.degree() % 2 != 0) throw dimension_error("positivity_test: degree must be even");
  const double scale = std::max(1.0, max_abs(a));
  if (!is_real(a, 1e-12 * scale)) return {false, std::nullopt, cd(0.0)};
  const int k = a.degree() / 2;
  if (k == 0) {
    cd c = a.coeff(0);
    return {c.real() >= -1e-9 * scale, std::nullopt, c};
  }
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    LinearMapHtoH g{random_qmatrix(a.n(), k, rng)};
    cd kappa = top_coefficient(pullback(g, a));
    // g enters with degree 2k, so compare against the size of its entries
    double gs = 0;
    for (int r = 0; r < a.n(); ++r)
      for (int c = 0; c < k; ++c) gs = std::max(gs, std::sqrt(g.matrix(r, c).norm2()));
    const double tol = 1e-9 * scale * std::max(1.0, std::pow(gs, 2 * k));
    if (std::abs(kappa.imag()) > tol || kappa.real() < -tol) return {false, g, kappa};
  }
  return {true, std::nullopt, cd(0.0)};
}

} // namespace qma
