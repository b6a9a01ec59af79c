#pragma once
/// @file run.hpp
/// Command execution behind the `qma` tool. Every command produces a table
/// (written as CSV) and a list of tolerance checks; the JSON report carries
/// both plus a command summary. Output depends only on the configuration and
/// seed, never on the worker count.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qma/config.hpp"
#include "qma/currents.hpp"
#include "qma/potential.hpp"
#include "qma/suites.hpp"

namespace qma {

inline constexpr int report_schema_version = 1;

using Cell = std::variant<std::string, double, long long>;

struct Report {
  std::string command;
  int n = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<CheckRow> checks;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();

  /// Never true without at least one evaluated tolerance.
  bool passed() const {
    if (checks.empty()) return false;
    for (const auto& c : checks)
      if (!c.passed()) return false;
    return true;
  }
};

struct RunOptions {
  int jobs = 1;
};

namespace detail {

inline BallQuadrature ball_quadrature(const RunConfig& c, const RunOptions& o) {
  BallQuadrature q;
  q.radial_nodes = c.quadrature.radial_nodes;
  q.sphere_nodes = c.quadrature.sphere_nodes;
  q.seed = c.seed;
  q.jobs = o.jobs;
  return q;
}

inline Vec center_of(const RunConfig& c) {
  if (!c.run.center) return Vec::Zero(4 * c.n);
  return Eigen::Map<const Vec>(c.run.center->data(), static_cast<Eigen::Index>(c.run.center->size()));
}

inline std::vector<double> sorted_radii(const RunConfig& c, std::vector<double> fallback) {
  std::vector<double> r = c.run.radii.value_or(std::move(fallback));
  std::sort(r.begin(), r.end());
  if (std::adjacent_find(r.begin(), r.end()) != r.end()) throw config_error("radii must be distinct");
  return r;
}

inline std::string tag(const char* prefix, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%.6g", prefix, v);
  return buf;
}

inline std::vector<Point> direction_samples(int dim, std::uint64_t seed) {
  const SphereRule s = sphere_rule(dim, 0, seed);
  std::vector<Point> out;
  for (std::size_t k = 0; k < s.size(); ++k) out.push_back(s.nodes.col(k));
  return out;
}

inline Report run_verify(const RunConfig& c) {
  const int samples = c.run.samples.value_or(100), degree = c.run.degree.value_or(3);
  const double tol = c.run.tolerance.value_or(1e-10);
  Report r;
  auto add = [&](std::vector<CheckRow> rows) {
    for (auto& row : rows) r.checks.push_back(std::move(row));
  };
  add(embedding_suite(1000, samples, c.n, c.seed, tol));
  if (c.n <= 2) add(exact_identity_suite(c.n, std::max(2, samples / 10), degree, c.seed + 1));
  add(anchor_suite(c.n));
  if (c.n <= 2) add(moore_suite(c.n, samples, c.seed + 2, tol));
  r.columns = {"suite", "name", "deviation", "tolerance", "passed"};
  for (const auto& k : r.checks)
    r.rows.push_back({k.suite, k.name, k.deviation, k.tolerance, static_cast<long long>(k.passed())});
  return r;
}

inline Report run_ma(const RunConfig& c) {
  const std::vector<std::string> names = c.run.fields.value_or([&] {
    std::vector<std::string> all;
    for (const auto& f : c.fields) all.push_back(f.name);
    return all;
  }());
  if (names.empty()) throw config_error("ma needs at least one field");
  const int samples = c.run.samples.value_or(20);
  const double tol = c.run.tolerance.value_or(1e-9);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> radius(0.2, 1.0);
  std::vector<Point> points;
  for (int k = 0; k < samples; ++k) {
    Point x = random_ball_point(c.n, rng);
    points.push_back(radius(rng) * x / x.norm());
  }
  Report r;
  r.columns = {"field", "sample", "norm", "ma_density", "moore", "relative_deviation"};
  for (const auto& name : names) {
    const ScalarField u = c.field(name);
    double worst = 0;
    for (int k = 0; k < samples; ++k) {
      const EquivalenceResult e = moore_equivalence_check(u, points[k]);
      const double rel = e.lhs != 0 ? e.deviation / std::abs(e.lhs) : e.deviation;
      worst = std::max(worst, rel);
      r.rows.push_back({name, static_cast<long long>(k), points[k].norm(), e.lhs, e.rhs, rel});
    }
    r.checks.push_back({"ma", name + "_vs_moore", worst, tol});
  }
  return r;
}

inline Report run_fundamental(const RunConfig& c, const RunOptions& o) {
  std::vector<double> eps = c.run.eps.value_or(std::vector<double>{1e-1, 1e-2, 1e-3});
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const double tol = c.run.tolerance.value_or(1e-6);
  const BallQuadrature q = ball_quadrature(c, o);
  const double limit = fundamental_mass(c.n);
  Report r;
  r.columns = {"eps", "mass", "quadrature_error", "exact_mass", "deviation_exact", "limit", "deviation_limit"};
  for (double e : eps) {
    const ScalarField u = invshift(c.n, e);
    // the density varies on the scale sqrt(eps); a panel break there keeps the radial rule resolved
    const std::vector<double> breaks{std::min(0.5, std::sqrt(e))};
    const Estimate m = integrate_ball([&u](const Point& x) { return ma_density(u, x); }, Vec::Zero(4 * c.n), 1.0, q, breaks);
    const double exact = fundamental_mass_unit_ball(c.n, e);
    const double dev = std::abs(m.value - exact) / exact, dev_limit = std::abs(m.value - limit) / limit;
    r.rows.push_back({e, m.value, m.error, exact, dev, limit, dev_limit});
    r.checks.push_back({"fundamental", tag("mass_vs_exact_eps_", e), dev, tol});
  }
  if (c.run.limit_tolerance)
    r.checks.push_back({"fundamental", tag("mass_vs_limit_eps_", eps.back()),
                        std::get<double>(r.rows.back()[6]), *c.run.limit_tolerance});
  r.summary["limit"] = limit;
  return r;
}

inline RegularizedCurrent build_current(const RunConfig& c) {
  int betas = 0;
  std::vector<std::pair<ScalarField, std::string>> lap;
  for (const auto& f : current_factors(*c.run.current, c)) {
    if (f.beta) ++betas;
    else if (f.argument) lap.push_back({build_field(*f.argument, c.n), expr::render(*f.argument)});
    else lap.push_back({c.field(f.field), f.field});
  }
  RegularizedCurrent t = beta_power(c.n, betas);
  for (auto it = lap.rbegin(); it != lap.rend(); ++it) t = bt_product(it->first, t, it->second);
  return t;
}

inline Report run_lelong(const RunConfig& c, const RunOptions& o) {
  std::vector<double> fallback;
  for (int k = 6; k >= 1; --k) fallback.push_back(std::ldexp(1.0, -k));
  const std::vector<double> radii = sorted_radii(c, fallback);
  const RegularizedCurrent t = build_current(c);
  if (t.degree() == 2 * c.n) throw config_error("current has top degree; its trace measure is not defined by beta powers");
  const LelongResult res = lelong_number(t, center_of(c), radii, ball_quadrature(c, o));
  Report r;
  r.columns = {"radius", "normalized_mass", "error"};
  for (std::size_t k = 0; k < radii.size(); ++k)
    r.rows.push_back({res.profile.radii[k], res.profile.values[k], res.profile.errors[k]});
  r.checks.push_back({"lelong", "profile_monotone", res.monotone ? 0.0 : 1.0, 0.0});
  if (c.run.expected) {
    const double scale = std::max(std::abs(*c.run.expected), 1.0);
    r.checks.push_back({"lelong", "nu_vs_expected", std::abs(res.nu - *c.run.expected) / scale,
                        c.run.tolerance.value_or(1e-2)});
  }
  if (c.run.profile_tolerance) {
    const auto& v = res.profile.values;
    const double ref = v.front();
    double spread = 0;
    for (double x : v) spread = std::max(spread, std::abs(x - ref));
    r.checks.push_back({"lelong", "profile_flatness", ref != 0 ? spread / std::abs(ref) : spread, *c.run.profile_tolerance});
  }
  r.summary["current"] = t.label();
  r.summary["codegree"] = t.codegree();
  r.summary["nu"] = res.nu;
  r.summary["nu_error"] = res.nu_error;
  r.summary["nu_radius"] = res.nu_radius;
  r.summary["monotone"] = res.monotone;
  return r;
}

inline Exhaustion exhaustion_of(const RunConfig& c) {
  std::optional<Vec> center;
  if (c.run.center) center = center_of(c);
  return Exhaustion(c.field(*c.run.exhaustion), center);
}

inline Report run_jensen(const RunConfig& c, const RunOptions& o) {
  const std::vector<double> radii = sorted_radii(c, {1.0});
  const Exhaustion ex = exhaustion_of(c);
  const ScalarField v = c.field(*c.run.weight);
  const BallQuadrature q = ball_quadrature(c, o);
  const double tol = c.run.tolerance.value_or(1e-4);
  Report r;
  r.columns = {"r",           "boundary",      "volume",         "lhs",          "rhs_spatial",      "rhs_layered",
               "lhs_error",   "spatial_error", "layered_error",  "relative_residual"};
  std::vector<JensenReport> reps;
  for (double rad : radii) {
    const JensenReport j = lelong_jensen(ex, v, rad, q);
    r.rows.push_back({j.r, j.boundary, j.volume, j.lhs, j.rhs_spatial, j.rhs_layered, j.lhs_error, j.spatial_error,
                      j.layered_error, j.relative_residual()});
    r.checks.push_back({"jensen", tag("residual_r_", rad), j.relative_residual(), tol});
    reps.push_back(j);
  }
  if (reps.size() > 1) r.checks.push_back({"jensen", "monotone_in_r", jensen_monotone(reps) ? 0.0 : 1.0, 0.0});
  return r;
}

inline Report run_boundary(const RunConfig& c, const RunOptions& o) {
  const std::vector<double> radii = sorted_radii(c, {0.25, 0.5, 1.0});
  const Exhaustion ex = exhaustion_of(c);
  const BallQuadrature q = ball_quadrature(c, o);
  const double tol = c.run.tolerance.value_or(1e-3);
  const std::vector<Point> dirs = direction_samples(ex.dim(), c.seed);
  Report r;
  r.columns = {"r", "boundary_mass", "boundary_error", "volume_mass", "volume_error", "relative_deviation",
               "density_min", "density_mean", "density_max"};
  for (double rad : radii) {
    const MassIdentity m = mass_identity(ex, rad, q);
    const double rel = m.volume != 0 ? m.deviation() / std::abs(m.volume) : m.deviation();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0;
    for (const Point& d : dirs) {
      const double mu = boundary_measure_density(ex.phi(), ex.center() + ex.radius(rad, d) * d);
      lo = std::min(lo, mu);
      hi = std::max(hi, mu);
      sum += mu;
    }
    r.rows.push_back({rad, m.boundary, m.boundary_error, m.volume, m.volume_error, rel, lo, sum / dirs.size(), hi});
    r.checks.push_back({"boundary", tag("mass_identity_r_", rad), rel, tol});
  }
  return r;
}

inline Report run_cln(const RunConfig& c, const RunOptions& o) {
  const int family = c.run.family.value_or(50), slots = c.run.slots.value_or(c.n);
  const double r_in = c.run.r_inner.value_or(0.5), r_out = c.run.r_outer.value_or(1.0);
  const double bound = c.run.bound.value_or(1e3);
  const BallQuadrature q = ball_quadrature(c, o);
  const Vec center = center_of(c);
  const std::vector<Point> probe = direction_samples(4 * c.n, c.seed);
  Report r;
  r.columns = {"member", "source", "norm", "norm_error", "sup_product", "ratio"};
  double worst = 0;
  auto add = [&](long long k, const std::string& source, const std::vector<ScalarField>& us) {
    for (const auto& u : us) {
      std::vector<Point> pts{center};
      for (const Point& d : probe) pts.push_back(center + r_out * d);
      if (!psh_test(u, pts).consistent) throw precondition_error("cln: " + source + " is not plurisubharmonic");
    }
    const ClnRatio cr = cln_ratio(us, center, r_in, r_out, q);
    worst = std::max(worst, cr.ratio);
    r.rows.push_back({k, source, cr.norm, cr.norm_error, cr.sup_product, cr.ratio});
  };
  long long k = 0;
  for (const auto& name : c.run.fields.value_or(std::vector<std::string>{}))
    add(k++, name, std::vector<ScalarField>(slots, c.field(name)));
  std::mt19937_64 rng(c.seed);
  for (int m = 0; m < family; ++m) {
    std::vector<ScalarField> us;
    for (int s = 0; s < slots; ++s) us.push_back(quadform(random_psd_hyperhermitian(c.n, rng)));
    add(k++, "random_psh_quadratic", us);
  }
  if (r.rows.empty()) throw config_error("cln needs fields or a positive family size");
  r.checks.push_back({"cln", "max_ratio_within_bound", worst, bound});
  r.summary["max_ratio"] = worst;
  return r;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return csv_escape(*s);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return format_double(std::get<double>(c));
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

} // namespace detail

/// Executes the configured command.
inline Report execute(const RunConfig& c, const RunOptions& o = {}) {
  Report r;
  if (c.command == "verify") r = detail::run_verify(c);
  else if (c.command == "ma") r = detail::run_ma(c);
  else if (c.command == "fundamental") r = detail::run_fundamental(c, o);
  else if (c.command == "lelong") r = detail::run_lelong(c, o);
  else if (c.command == "jensen") r = detail::run_jensen(c, o);
  else if (c.command == "boundary") r = detail::run_boundary(c, o);
  else if (c.command == "cln") r = detail::run_cln(c, o);
  else throw config_error("unknown command '" + c.command + "'");
  r.command = c.command;
  r.n = c.n;
  r.seed = c.seed;
  return r;
}

inline std::string to_csv(const Report& r) {
  std::string s = "# schema_version=" + std::to_string(report_schema_version) + "\n";
  for (std::size_t i = 0; i < r.columns.size(); ++i) s += (i ? "," : "") + r.columns[i];
  s += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + detail::cell_text(row[i]);
    s += "\n";
  }
  return s;
}

inline nlohmann::ordered_json to_json(const Report& r) {
  using J = nlohmann::ordered_json;
  J j;
  j["schema_version"] = report_schema_version;
  j["command"] = r.command;
  j["n"] = r.n;
  j["seed"] = r.seed;
  j["passed"] = r.passed();
  J checks = J::array();
  for (const auto& c : r.checks)
    checks.push_back({{"suite", c.suite}, {"name", c.name}, {"deviation", c.deviation}, {"tolerance", c.tolerance},
                      {"passed", c.passed()}});
  j["checks"] = checks;
  j["summary"] = r.summary;
  J table = J::object();
  table["columns"] = r.columns;
  J rows = J::array();
  for (const auto& row : r.rows) {
    J out = J::array();
    for (const auto& cell : row) std::visit([&out](const auto& v) { out.push_back(v); }, cell);
    rows.push_back(out);
  }
  table["rows"] = rows;
  j["table"] = table;
  return j;
}

/// Writes <command>.csv and <command>.json into `dir`.
inline void write_report(const Report& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::write_atomic(dir / (r.command + ".csv"), to_csv(r));
  detail::write_atomic(dir / (r.command + ".json"), to_json(r).dump(2) + "\n");
}

} // namespace qma
