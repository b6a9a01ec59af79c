#pragma once
/// @file config.hpp
/// Run configurations: a sectioned key = value text format and a small
/// expression grammar for scalar fields.
///
///   # comment
///   command = jensen
///   n = 1
///   seed = 42
///   [fields]
///   phi = normsq()
///   v = x0^2 + 3/2*x1 - invshift(1/100)
///   [quadrature]
///   radial_nodes = 64
///   [run]
///   radii = 0.25, 0.5, 1
///
/// Expressions: expr := term (('+' | '-') term)*, term := unary ('*' unary)*,
/// unary := '-' unary | power, power := atom ('^' integer)?, atom := number |
/// x<i> | normsq() | invshift(number) | quadform(matrix) | '(' expr ')'.
/// Numbers are integers, decimals or p/q and are read exactly. Matrix entries
/// are numbers or quaternions written (x0, x1, x2, x3).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qma/fields.hpp"

namespace qma {

// ---- expressions -----------------------------------------------------------------

namespace expr {

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
  Rational value;
};
struct Variable {
  int index;
};
struct NormSq {};
struct InvShift {
  Rational eps;
};
struct QuadForm {
  std::vector<std::vector<Quaternion<Rational>>> rows;
};
struct Negate {
  NodePtr arg;
};
struct Binary {
  char op; // '+', '-', '*'
  NodePtr lhs, rhs;
};
struct Power {
  NodePtr base;
  int exponent;
};

struct Node {
  std::variant<Number, Variable, NormSq, InvShift, QuadForm, Negate, Binary, Power> v;
};

inline std::string rational_str(const Rational& r) { return r.get_str(); }

inline int precedence(const Node& n) {
  if (const auto* b = std::get_if<Binary>(&n.v)) return b->op == '*' ? 2 : 1;
  if (std::holds_alternative<Negate>(n.v)) return 3;
  if (std::holds_alternative<Power>(n.v)) return 4;
  if (const auto* num = std::get_if<Number>(&n.v)) return num->value.get_den() == 1 ? 5 : 2;
  return 5;
}

/// Canonical text; parse(render(e)) renders back to the same string.
inline std::string render(const Node& n) {
  auto wrap = [](const NodePtr& c, int min_prec) {
    const std::string s = render(*c);
    return precedence(*c) < min_prec ? "(" + s + ")" : s;
  };
  return std::visit(
      [&](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Number>) return rational_str(x.value);
        else if constexpr (std::is_same_v<T, Variable>) return "x" + std::to_string(x.index);
        else if constexpr (std::is_same_v<T, NormSq>) return "normsq()";
        else if constexpr (std::is_same_v<T, InvShift>) return "invshift(" + rational_str(x.eps) + ")";
        else if constexpr (std::is_same_v<T, QuadForm>) {
          std::string s = "quadform([";
          for (std::size_t r = 0; r < x.rows.size(); ++r) {
            s += r ? ", [" : "[";
            for (std::size_t c = 0; c < x.rows[r].size(); ++c) {
              const auto& q = x.rows[r][c];
              if (c) s += ", ";
              if (sgn(q.x1) == 0 && sgn(q.x2) == 0 && sgn(q.x3) == 0) s += rational_str(q.x0);
              else
                s += "(" + rational_str(q.x0) + ", " + rational_str(q.x1) + ", " + rational_str(q.x2) + ", " +
                     rational_str(q.x3) + ")";
            }
            s += "]";
          }
          return s + "])";
        } else if constexpr (std::is_same_v<T, Negate>) return "-" + wrap(x.arg, 3);
        else if constexpr (std::is_same_v<T, Binary>) {
          const int p = x.op == '*' ? 2 : 1;
          // left-associative: the right operand needs parentheses at equal precedence
          return wrap(x.lhs, p) + " " + x.op + " " + wrap(x.rhs, p + 1);
        } else return wrap(x.base, 5) + "^" + std::to_string(x.exponent);
      },
      n.v);
}

class Parser {
public:
  Parser(std::string_view text, int n, int line, int column0) : s_(text), n_(n), line_(line), col0_(column0) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw config_error(what, line_, col0_ + static_cast<int>(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }
  static NodePtr make(auto v) { return std::make_shared<const Node>(Node{std::move(v)}); }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Binary{'+', lhs, term()});
      else if (eat('-')) lhs = make(Binary{'-', lhs, term()});
      else return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = unary();
    while (eat('*')) lhs = make(Binary{'*', lhs, unary()});
    return lhs;
  }
  NodePtr unary() {
    if (eat('-')) return make(Negate{unary()});
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (!eat('^')) return base;
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    int e = 0;
    if (start == pos_ || std::from_chars(s_.data() + start, s_.data() + pos_, e).ec != std::errc{} || e > 64)
      fail("exponent must be an integer between 0 and 64");
    return make(Power{base, e});
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return make(Number{number()});
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string word(s_.substr(start, pos_ - start));
      if (word.size() > 1 && word[0] == 'x' && std::all_of(word.begin() + 1, word.end(), ::isdigit)) {
        const int i = std::stoi(word.substr(1));
        if (i >= 4 * n_) {
          pos_ = start;
          fail("variable " + word + " does not exist for n = " + std::to_string(n_));
        }
        return make(Variable{i});
      }
      expect('(');
      if (word == "normsq") {
        expect(')');
        return make(NormSq{});
      }
      if (word == "invshift") {
        skip();
        Rational eps = number();
        expect(')');
        if (sgn(eps) < 0) fail("invshift: eps must be nonnegative");
        return make(InvShift{eps});
      }
      if (word == "quadform") {
        QuadForm q = matrix();
        expect(')');
        return make(std::move(q));
      }
      pos_ = start;
      fail("unknown function '" + word + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  /// integer, decimal (with optional exponent) or p/q, read exactly
  Rational number() {
    skip();
    bool neg = false;
    if (pos_ < s_.size() && s_[pos_] == '-') {
      neg = true;
      ++pos_;
    }
    const std::size_t start = pos_;
    std::string digits;
    int scale = 0;
    bool dot = false, any = false;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits += c;
        any = true;
        if (dot) --scale;
      } else if (c == '.' && !dot) {
        dot = true;
      } else {
        break;
      }
      ++pos_;
    }
    if (!any) {
      pos_ = start;
      fail("expected a number");
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      ++pos_;
      const std::size_t e0 = pos_;
      if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      int e = 0;
      std::string_view ev = s_.substr(e0, pos_ - e0);
      if (!ev.empty() && ev[0] == '+') ev.remove_prefix(1);
      if (ev.empty() || std::from_chars(ev.data(), ev.data() + ev.size(), e).ec != std::errc{} || std::abs(e) > 300)
        fail("bad exponent");
      scale += e;
    }
    Rational v{mpz_class(digits, 10)};
    mpz_class p10;
    mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::abs(scale)));
    if (scale >= 0) v *= p10;
    else v /= p10;
    v.canonicalize();
    if (!dot && scale == 0 && pos_ < s_.size() && s_[pos_] == '/') {
      ++pos_;
      const std::size_t d0 = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (d0 == pos_) fail("expected a denominator");
      mpz_class den(std::string(s_.substr(d0, pos_ - d0)), 10);
      if (den == 0) fail("zero denominator");
      v /= Rational(den);
      v.canonicalize();
    }
    return neg ? Rational(-v) : v;
  }

  Quaternion<Rational> entry() {
    skip();
    if (eat('(')) {
      Rational c[4];
      for (int i = 0; i < 4; ++i) {
        if (i) expect(',');
        c[i] = number();
      }
      expect(')');
      return {c[0], c[1], c[2], c[3]};
    }
    return Quaternion<Rational>(number());
  }

  QuadForm matrix() {
    QuadForm q;
    expect('[');
    do {
      expect('[');
      q.rows.emplace_back();
      do q.rows.back().push_back(entry());
      while (eat(','));
      expect(']');
    } while (eat(','));
    expect(']');
    const std::size_t m = q.rows.size();
    if (m != static_cast<std::size_t>(n_)) fail("quadform: matrix must be " + std::to_string(n_) + " x " + std::to_string(n_));
    for (std::size_t r = 0; r < m; ++r) {
      if (q.rows[r].size() != m) fail("quadform: matrix is not square");
      for (std::size_t c = 0; c < m; ++c)
        if (!(q.rows[r][c] == q.rows[c][r].conj())) fail("quadform: matrix is not hyperhermitian");
    }
    return q;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int n_, line_, col0_;
};

/// Polynomial while every operand is polynomial, a closed-form field otherwise.
using Value = std::variant<Polynomial, ScalarField>;

inline ScalarField as_field(int n, const Value& v) {
  if (const auto* p = std::get_if<Polynomial>(&v)) return ScalarField::polynomial(n, *p);
  return std::get<ScalarField>(v);
}

inline Value evaluate(const Node& node, int n) {
  return std::visit(
      [n](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Number>) return Polynomial(GaussRational(x.value));
        else if constexpr (std::is_same_v<T, Variable>) return Polynomial::var(x.index);
        else if constexpr (std::is_same_v<T, NormSq>) return normsq_poly(n);
        else if constexpr (std::is_same_v<T, InvShift>) return invshift(n, x.eps.get_d());
        else if constexpr (std::is_same_v<T, QuadForm>) {
          QMatrix<Rational> m(n, n);
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) m(r, c) = x.rows[r][c];
          return quadform_poly(HyperhermitianMatrix<Rational>(m));
        } else if constexpr (std::is_same_v<T, Negate>) {
          Value a = evaluate(*x.arg, n);
          if (auto* p = std::get_if<Polynomial>(&a)) return -*p;
          return -1.0 * std::get<ScalarField>(a);
        } else if constexpr (std::is_same_v<T, Binary>) {
          Value a = evaluate(*x.lhs, n), b = evaluate(*x.rhs, n);
          auto* pa = std::get_if<Polynomial>(&a);
          auto* pb = std::get_if<Polynomial>(&b);
          if (pa && pb) {
            if (x.op == '+') return *pa + *pb;
            if (x.op == '-') return *pa - *pb;
            return *pa * *pb;
          }
          const ScalarField fa = as_field(n, a), fb = as_field(n, b);
          if (x.op == '+') return fa + fb;
          if (x.op == '-') return fa - fb;
          return fa * fb;
        } else {
          Value base = evaluate(*x.base, n);
          if (auto* p = std::get_if<Polynomial>(&base)) return pow(*p, x.exponent);
          const ScalarField f = std::get<ScalarField>(base);
          ScalarField r = ScalarField::constant(n, 1.0);
          for (int k = 0; k < x.exponent; ++k) r = r * f;
          return r;
        }
      },
      node.v);
}

} // namespace expr

/// Parses a field expression for the given n; throws config_error on bad input.
inline expr::NodePtr parse_expression(std::string_view text, int n, int line = 0, int column = 1) {
  return expr::Parser(text, n, line, column).parse();
}

inline ScalarField build_field(const expr::Node& e, int n) { return expr::as_field(n, expr::evaluate(e, n)); }

// ---- run configuration -----------------------------------------------------------

struct QuadratureConfig {
  int radial_nodes = 64;
  std::size_t sphere_nodes = 4096;
  double delta = 1e-2; // co-area shell half-width relative to r - min phi
  bool operator==(const QuadratureConfig&) const = default;
};

struct RunParameters {
  std::optional<int> samples, degree, family, slots;
  std::optional<double> tolerance, limit_tolerance, profile_tolerance, expected, bound, r_inner, r_outer;
  std::optional<std::vector<double>> eps, radii, center;
  std::optional<std::vector<std::string>> fields;
  std::optional<std::string> current, exhaustion, weight;
  bool operator==(const RunParameters&) const = default;
};

struct FieldDef {
  std::string name;
  std::string expression; // canonical form
  bool operator==(const FieldDef&) const = default;
};

struct RunConfig {
  std::string command;
  int n = 1;
  std::uint64_t seed = 0;
  std::vector<FieldDef> fields;
  QuadratureConfig quadrature;
  RunParameters run;

  bool operator==(const RunConfig&) const = default;

  const FieldDef* find_field(const std::string& name) const {
    for (const auto& f : fields)
      if (f.name == name) return &f;
    return nullptr;
  }
  ScalarField field(const std::string& name) const {
    const FieldDef* f = find_field(name);
    if (!f) throw config_error("unknown field '" + name + "'");
    return build_field(*parse_expression(f->expression, n), n);
  }
};

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c{"verify", "ma", "fundamental", "lelong", "jensen", "boundary", "cln"};
  return c;
}

namespace detail {

inline const std::map<std::string, std::set<std::string>>& run_keys_by_command() {
  static const std::map<std::string, std::set<std::string>> k{
      {"verify", {"samples", "degree", "tolerance"}},
      {"ma", {"fields", "samples", "tolerance"}},
      {"fundamental", {"eps", "tolerance", "limit_tolerance"}},
      {"lelong", {"current", "radii", "center", "expected", "tolerance", "profile_tolerance"}},
      {"jensen", {"exhaustion", "weight", "radii", "center", "tolerance"}},
      {"boundary", {"exhaustion", "radii", "center", "tolerance"}},
      {"cln", {"fields", "family", "slots", "r_inner", "r_outer", "center", "bound"}},
  };
  return k;
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Cursor {
  int line, column;
};

inline double to_double(const std::string& v, Cursor at) {
  double d = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, d);
  if (ec != std::errc{} || p != end || !std::isfinite(d)) throw config_error("expected a number, got '" + v + "'", at.line, at.column);
  return d;
}

template <class I>
I to_integer(const std::string& v, Cursor at) {
  I i = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, i);
  if (ec != std::errc{} || p != end) throw config_error("expected an integer, got '" + v + "'", at.line, at.column);
  return i;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline bool valid_name(const std::string& s) {
  return !s.empty() && (std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_') &&
         std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

} // namespace detail

/// One factor of a current: beta, or laplace of a named field or of an inline expression.
struct CurrentFactor {
  bool beta = false;
  std::string field;      // set when the argument names a field
  expr::NodePtr argument; // set otherwise
  std::string text() const {
    if (beta) return "beta";
    return "laplace(" + (argument ? expr::render(*argument) : field) + ")";
  }
};

/// Factors of `laplace(a) ^ laplace(b) ^ beta`, split on '^' outside parentheses.
inline std::vector<CurrentFactor> current_factors(const std::string& text, const RunConfig& cfg,
                                                  detail::Cursor at = {0, 1}) {
  std::vector<std::string> parts(1);
  int depth = 0;
  for (char c : text) {
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == '^' && depth == 0) parts.emplace_back();
    else parts.back() += c;
  }
  std::vector<CurrentFactor> out;
  for (const auto& raw : parts) {
    const std::string t = detail::trim(raw);
    CurrentFactor f;
    if (t == "beta") {
      f.beta = true;
    } else if (t.rfind("laplace", 0) == 0 && detail::trim(t.substr(7)).front() == '(' && t.back() == ')') {
      std::string arg = detail::trim(t.substr(7));
      arg = detail::trim(arg.substr(1, arg.size() - 2));
      if (cfg.find_field(arg)) f.field = arg;
      else f.argument = parse_expression(arg, cfg.n, at.line, at.column);
    } else {
      throw config_error("current factors are laplace(<field or expression>) or beta, got '" + t + "'", at.line,
                         at.column);
    }
    out.push_back(std::move(f));
  }
  if (static_cast<int>(out.size()) > cfg.n) throw config_error("current has more factors than n", at.line, at.column);
  return out;
}

/// Parses and validates a configuration; every error carries its line and column.
inline RunConfig parse_config(std::string_view text) {
  using detail::Cursor;
  RunConfig cfg;
  bool have_command = false, have_n = false, have_seed = false;
  std::string section;
  struct Pending {
    std::string key, value;
    Cursor at, key_at;
  };
  std::vector<Pending> fields, runs;
  std::set<std::string> seen;

  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string line(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = detail::trim(line);
    if (t.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const int indent = static_cast<int>(line.find_first_not_of(" \t")) + 1;
    if (t.front() == '[') {
      if (t.back() != ']') throw config_error("unterminated section header", line_no, indent);
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      if (section != "fields" && section != "quadrature" && section != "run")
        throw config_error("unknown section [" + section + "]", line_no, indent);
      if (!seen.insert("[" + section + "]").second) throw config_error("duplicate section [" + section + "]", line_no, indent);
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error("expected 'key = value'", line_no, indent);
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    const int vcol = static_cast<int>(line.find_first_not_of(" \t", eq + 1)) + 1;
    const Cursor kat{line_no, indent}, vat{line_no, vcol > 0 ? vcol : static_cast<int>(eq) + 2};
    if (!detail::valid_name(key)) throw config_error("bad key '" + key + "'", kat.line, kat.column);
    if (value.empty()) throw config_error("missing value for '" + key + "'", vat.line, vat.column);
    if (!seen.insert(section + "." + key).second) throw config_error("duplicate key '" + key + "'", kat.line, kat.column);

    if (section.empty()) {
      if (key == "command") {
        cfg.command = value;
        if (std::find(known_commands().begin(), known_commands().end(), value) == known_commands().end())
          throw config_error("unknown command '" + value + "'", vat.line, vat.column);
        have_command = true;
      } else if (key == "n") {
        cfg.n = detail::to_integer<int>(value, vat);
        have_n = true;
      } else if (key == "seed") {
        cfg.seed = detail::to_integer<std::uint64_t>(value, vat);
        have_seed = true;
      } else {
        throw config_error("unknown key '" + key + "'", kat.line, kat.column);
      }
    } else if (section == "fields") {
      fields.push_back({key, value, vat, kat});
    } else if (section == "quadrature") {
      if (key == "radial_nodes") {
        cfg.quadrature.radial_nodes = detail::to_integer<int>(value, vat);
        if (cfg.quadrature.radial_nodes < 1) throw config_error("radial_nodes must be positive", vat.line, vat.column);
      } else if (key == "sphere_nodes") {
        cfg.quadrature.sphere_nodes = detail::to_integer<std::size_t>(value, vat);
        if (cfg.quadrature.sphere_nodes < 1) throw config_error("sphere_nodes must be positive", vat.line, vat.column);
      } else if (key == "delta") {
        cfg.quadrature.delta = detail::to_double(value, vat);
        if (!(cfg.quadrature.delta > 0 && cfg.quadrature.delta < 1)) throw config_error("delta must lie in (0, 1)", vat.line, vat.column);
      } else {
        throw config_error("unknown key '" + key + "' in [quadrature]", kat.line, kat.column);
      }
    } else {
      runs.push_back({key, value, vat, kat});
    }
    if (end == text.size()) break;
  }
  if (!have_command) throw config_error("missing 'command'");
  if (!have_seed) throw config_error("missing 'seed'");
  if (!have_n) throw config_error("missing 'n'");
  const int max_n = cfg.command == "verify" ? 3 : 2;
  if (cfg.n < 1 || cfg.n > max_n)
    throw config_error("n must be between 1 and " + std::to_string(max_n) + " for '" + cfg.command + "'");

  for (const auto& f : fields) {
    if (cfg.find_field(f.key)) throw config_error("duplicate field '" + f.key + "'", f.at.line, f.at.column);
    if (cfg.n > 2) throw config_error("fields need n <= 2", f.at.line, f.at.column);
    const expr::NodePtr e = parse_expression(f.value, cfg.n, f.at.line, f.at.column);
    cfg.fields.push_back({f.key, expr::render(*e)});
  }

  const auto& allowed = detail::run_keys_by_command().at(cfg.command);
  auto& r = cfg.run;
  auto positive = [](double v, const std::string& key, Cursor at) {
    if (!(v > 0)) throw config_error(key + " must be positive", at.line, at.column);
    return v;
  };
  auto names = [&](const std::string& v, Cursor at) {
    std::vector<std::string> out = detail::split_list(v);
    for (const auto& s : out)
      if (!cfg.find_field(s)) throw config_error("unknown field '" + s + "'", at.line, at.column);
    return out;
  };
  auto doubles = [](const std::string& v, Cursor at) {
    std::vector<double> out;
    for (const auto& s : detail::split_list(v)) out.push_back(detail::to_double(s, at));
    return out;
  };
  for (const auto& p : runs) {
    const Cursor at = p.at;
    if (!allowed.count(p.key))
      throw config_error("key '" + p.key + "' is not used by '" + cfg.command + "'", p.key_at.line, p.key_at.column);
    const std::string& v = p.value;
    if (p.key == "samples" || p.key == "degree" || p.key == "family" || p.key == "slots") {
      const int i = detail::to_integer<int>(v, at);
      if (i < 1) throw config_error(p.key + " must be positive", at.line, at.column);
      if (p.key == "degree" && i > 3) throw config_error("degree must be at most 3", at.line, at.column);
      if (p.key == "slots" && i > cfg.n) throw config_error("slots must be at most n", at.line, at.column);
      (p.key == "samples" ? r.samples : p.key == "degree" ? r.degree : p.key == "family" ? r.family : r.slots) = i;
    } else if (p.key == "tolerance" || p.key == "limit_tolerance" || p.key == "profile_tolerance" || p.key == "bound" ||
               p.key == "r_inner" || p.key == "r_outer") {
      const double d = positive(detail::to_double(v, at), p.key, at);
      (p.key == "tolerance"           ? r.tolerance
       : p.key == "limit_tolerance"   ? r.limit_tolerance
       : p.key == "profile_tolerance" ? r.profile_tolerance
       : p.key == "bound"             ? r.bound
       : p.key == "r_inner"           ? r.r_inner
                                      : r.r_outer) = d;
    } else if (p.key == "expected") {
      r.expected = detail::to_double(v, at);
    } else if (p.key == "eps" || p.key == "radii") {
      std::vector<double> list = doubles(v, at);
      for (double d : list) positive(d, p.key, at);
      (p.key == "eps" ? r.eps : r.radii) = list;
    } else if (p.key == "center") {
      std::vector<double> c = doubles(v, at);
      if (static_cast<int>(c.size()) != 4 * cfg.n)
        throw config_error("center needs " + std::to_string(4 * cfg.n) + " coordinates", at.line, at.column);
      r.center = c;
    } else if (p.key == "fields") {
      r.fields = names(v, at);
    } else if (p.key == "exhaustion" || p.key == "weight") {
      if (!cfg.find_field(v)) throw config_error("unknown field '" + v + "'", at.line, at.column);
      (p.key == "exhaustion" ? r.exhaustion : r.weight) = v;
    } else if (p.key == "current") {
      std::string canon;
      for (const auto& f : current_factors(v, cfg, at)) canon += (canon.empty() ? "" : " ^ ") + f.text();
      r.current = canon;
    }
  }
  if (r.r_inner && r.r_outer && *r.r_inner > *r.r_outer) throw config_error("r_inner must not exceed r_outer");
  if (cfg.command == "lelong" && !r.current) throw config_error("lelong needs 'current'");
  if ((cfg.command == "jensen" || cfg.command == "boundary") && !r.exhaustion)
    throw config_error(cfg.command + " needs 'exhaustion'");
  if (cfg.command == "jensen" && !r.weight) throw config_error("jensen needs 'weight'");
  return cfg;
}

/// Canonical text of a configuration; parse_config(render(c)) == c.
inline std::string render(const RunConfig& c) {
  using detail::format_double;
  std::ostringstream o;
  auto list = [](const auto& v, auto fmt) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
  };
  auto ident = [](const std::string& s) { return s; };
  o << "command = " << c.command << "\nn = " << c.n << "\nseed = " << c.seed << "\n";
  if (!c.fields.empty()) {
    o << "\n[fields]\n";
    for (const auto& f : c.fields) o << f.name << " = " << f.expression << "\n";
  }
  o << "\n[quadrature]\nradial_nodes = " << c.quadrature.radial_nodes << "\nsphere_nodes = " << c.quadrature.sphere_nodes
    << "\ndelta = " << format_double(c.quadrature.delta) << "\n";
  const RunParameters& r = c.run;
  std::ostringstream run;
  auto opt_int = [&](const char* k, const std::optional<int>& v) {
    if (v) run << k << " = " << *v << "\n";
  };
  auto opt_double = [&](const char* k, const std::optional<double>& v) {
    if (v) run << k << " = " << format_double(*v) << "\n";
  };
  auto opt_list = [&](const char* k, const std::optional<std::vector<double>>& v) {
    if (v) run << k << " = " << list(*v, format_double) << "\n";
  };
  opt_int("samples", r.samples);
  opt_int("degree", r.degree);
  opt_int("family", r.family);
  opt_int("slots", r.slots);
  opt_double("tolerance", r.tolerance);
  opt_double("limit_tolerance", r.limit_tolerance);
  opt_double("profile_tolerance", r.profile_tolerance);
  opt_double("expected", r.expected);
  opt_double("bound", r.bound);
  opt_double("r_inner", r.r_inner);
  opt_double("r_outer", r.r_outer);
  opt_list("eps", r.eps);
  opt_list("radii", r.radii);
  opt_list("center", r.center);
  if (r.fields) run << "fields = " << list(*r.fields, ident) << "\n";
  if (r.current) run << "current = " << *r.current << "\n";
  if (r.exhaustion) run << "exhaustion = " << *r.exhaustion << "\n";
  if (r.weight) run << "weight = " << *r.weight << "\n";
  if (!run.str().empty()) o << "\n[run]\n" << run.str();
  return o.str();
}

} // namespace qma
