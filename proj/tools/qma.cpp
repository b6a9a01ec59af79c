// qma: runs one configured experiment and writes <command>.csv / <command>.json.
// Exit status: 0 when every tolerance holds, 2 when one fails, 1 on any error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qma/run.hpp"

namespace {

int jobs_from_env() {
  const char* v = std::getenv("QMA_JOBS");
  if (!v || !*v) return 1;
  const std::string s(v);
  int k = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
  if (ec != std::errc{} || p != s.data() + s.size() || k < 1) throw std::runtime_error("QMA_JOBS must be a positive integer");
  return k;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quaternionic Monge-Ampere experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  int jobs = 0;
  for (const auto& name : qma::known_commands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "overrides the configured seed");
    sub->add_option("--jobs", jobs, "worker threads (default: QMA_JOBS or 1)")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    std::ifstream in(config_path);
    std::stringstream text;
    text << in.rdbuf();
    qma::RunConfig cfg = qma::parse_config(text.str());
    if (cfg.command != sub->get_name())
      throw qma::config_error("config is for '" + cfg.command + "', not '" + sub->get_name() + "'");
    if (sub->count("--seed")) cfg.seed = seed;
    qma::RunOptions opt;
    opt.jobs = sub->count("--jobs") ? jobs : jobs_from_env();
    const qma::Report report = qma::execute(cfg, opt);
    qma::write_report(report, out_dir);
    for (const auto& c : report.checks)
      std::cout << (c.passed() ? "ok   " : "FAIL ") << c.suite << "/" << c.name << "  deviation " << c.deviation
                << "  tolerance " << c.tolerance << "\n";
    return report.passed() ? 0 : 2;
  } catch (const qma::config_error& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "qma " << sub->get_name() << ": " << e.what() << "\n";
    return 1;
  }
}
