// fermipole: run the benchmark experiments and write CSV/JSON reports.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fermipole/harness.hpp"
#include "fermipole/matsubara.hpp"

using namespace fermipole;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// key = value lines, '#' comments
std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::runtime_error("bad boolean: " + v);
}

void apply_config(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "seed") cfg.lattice.seed = std::stoull(v);
    else if (k == "size") cfg.lattice.L = std::stoi(v);
    else if (k == "potential_scale") cfg.lattice.potential_scale = std::stod(v);
    else if (k == "tol") cfg.tol = std::stod(v);
    else if (k == "out") cfg.output_dir = v;
    else if (k == "parallel") cfg.parallel = std::stoi(v);
    else if (k == "backend") cfg.backend = backend_from_string(v);
    else if (k == "metric") cfg.metric = metric_from_string(v);
    else if (k == "mu_policy") cfg.mu_policy = mu_policy_from_string(v);
    else if (k == "long") cfg.long_run = parse_bool(v);
    else if (k == "closed_shell_gap") cfg.closed_shell_gap = std::stod(v);
    else if (k == "tail_interval") cfg.tight_tail_interval = v == "tight";
    else if (k == "cheb_target") cfg.cheb_target = std::stod(v);
    else if (k == "beta_deltaE") {
      cfg.beta_deltaE_list.clear();
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.beta_deltaE_list.push_back(std::stod(trim(item)));
    } else throw std::runtime_error("unknown config key: " + k);
  }
}

void print_report(const ExperimentReport& rep) {
  std::cout << rep.name << (rep.passed() ? "  PASS" : "  FAIL") << '\n';
  for (const auto& r : rep.rows) {
    std::cout << "  bDE=" << r.beta_deltaE;
    if (r.M_pole) std::cout << " M_pole=" << *r.M_pole;
    std::cout << " N_pole=" << r.N_pole;
    if (r.N_cheb) std::cout << " N_cheb=" << *r.N_cheb;
    std::cout << " err=" << std::scientific << std::setprecision(3) << r.delta_rho_rel << std::defaultfloat
              << (r.passed ? "" : "  FAILED") << '\n';
  }
  for (const auto& c : rep.checks)
    std::cout << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << (c.detail.empty() ? "" : ": " + c.detail)
              << '\n';
}

// Resummation identity and group bound, quick self-checks.
ExperimentReport identity_check() {
  ExperimentReport rep;
  rep.name = "identity-check";
  double worst = 0.0;
  for (double x : {-100.0, -10.0, -1.0, 0.0, 0.5, 3.0, 40.0, 100.0})
    for (long M : {0L, 1L, 31L, 511L, 4095L})
      worst = std::max(worst, std::abs(1.0 - matsubara_partial_scalar(x, M) - digamma_tail_scalar(x, M) - fermi_scalar(x)));
  rep.checks.push_back({"resummation identity <= 1e-12", worst <= 1e-12, std::to_string(worst)});
  bool bound_ok = true;
  for (int P : {2, 4, 8, 16})
    for (int n = 2; n <= 10; ++n)
      for (int i = 0; i < 200; ++i) {
        const double x = -1e4 + 2e4 * (i + 0.5) / 200.0;
        bound_ok = bound_ok && group_truncation_error(n, P, x) <= 1.0 / (2.0 * std::numbers::pi * std::pow(3.0, P));
      }
  rep.checks.push_back({"multipole group bound", bound_ok, ""});
  return rep;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pole expansions of the Fermi operator on a tight-binding benchmark"};
  app.require_subcommand(1);
  app.fallthrough();

  ExperimentConfig cfg;
  int size = 16;
  std::uint64_t seed = cfg.lattice.seed;
  std::string backend = "eigen", metric = "trace", config_path, mu_policy;
  bool long_run = false;
  app.add_option("--seed", seed, "lattice RNG seed")->capture_default_str();
  app.add_option("--size", size, "lattice side length L")->capture_default_str();
  app.add_option("--tol", cfg.tol, "error criterion for the N_pole search")->capture_default_str();
  app.add_option("--out", cfg.output_dir, "output directory")->capture_default_str();
  app.add_option("--parallel", cfg.parallel, "worker threads for per-pole solves")->capture_default_str();
  app.add_option("--backend", backend, "resolvent | eigen")->capture_default_str();
  app.add_option("--metric", metric, "trace | diagonal")->capture_default_str();
  app.add_option("--mu-policy", mu_policy, "closed_shell | half_filling | gapless_at_eigenvalue | gap_1e-6");
  app.add_option("--config", config_path, "key = value file overriding the flags");
  app.add_flag("--long", long_run, "include the rows above 269312");
  bool tight = false;
  app.add_flag("--tight-tail", tight, "fit the Chebyshev tail on the spectrum seen from mu only");

  auto* t1 = app.add_subcommand("table1", "gapped contour, minimal N_pole vs beta*DeltaE");
  auto* t2 = app.add_subcommand("table2", "gapless contour, minimal N_pole vs beta*DeltaE");
  auto* t3 = app.add_subcommand("table3", "Matsubara simple-pole expansion with Chebyshev tail");
  auto* sg = app.add_subcommand("sign", "zero-temperature convergence in N_pole");
  auto* fg = app.add_subcommand("figure", "pole configuration data");
  auto* id = app.add_subcommand("identity-check", "scalar identities");
  CLI11_PARSE(app, argc, argv);

  try {
    cfg.lattice.L = size;
    cfg.lattice.seed = seed;
    cfg.backend = backend_from_string(backend);
    cfg.metric = metric_from_string(metric);
    cfg.long_run = long_run;
    cfg.tight_tail_interval = tight;
    if (!mu_policy.empty()) cfg.mu_policy = mu_policy_from_string(mu_policy);
    if (const char* env = std::getenv("FERMIPOLE_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (!config_path.empty()) apply_config(cfg, read_config(config_path));
    cfg.validate();

    nlohmann::json report;
    report["config"] = {{"size", cfg.lattice.L},
                        {"seed", cfg.lattice.seed},
                        {"tol", cfg.tol},
                        {"backend", to_string(cfg.backend)},
                        {"metric", to_string(cfg.metric)},
                        {"long", cfg.long_run}};
    bool ok = true;

    if (*fg) {
      write_json(output_path(cfg, "figure.json"), emit_pole_figure_data());
      std::cout << "wrote " << output_path(cfg, "figure.json") << '\n';
      report["figure"] = "figure.json";
    } else if (*id) {
      const auto rep = identity_check();
      print_report(rep);
      ok = rep.passed();
      report["identity-check"] = to_json(rep);
    } else {
      const auto bench = make_benchmark(cfg.lattice);
      std::cout << "lattice " << cfg.lattice.L << "x" << cfg.lattice.L << ", DeltaE = " << bench.delta_E() << '\n';
      ExperimentReport rep;
      if (*t1) rep = run_table1(cfg, bench);
      else if (*t2) rep = run_table2(cfg, bench);
      else if (*t3) rep = run_table3(cfg, bench);
      else if (*sg) rep = run_sign_convergence(cfg, bench);
      print_report(rep);
      ok = rep.passed();
      report[rep.name] = to_json(rep);
    }
    report["passed"] = ok;
    write_json(output_path(cfg, "report.json"), report);
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
