// Command-line front end: run, sweep, bounds, verify, solve-optimum.
//
// Exit codes: 0 success, 1 a verify check failed, 2 config error,
// 3 numeric failure, 4 no rate envelope applies (bounds).

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dosps/dosps.hpp"

namespace {

using namespace dosps;

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInapplicable = 4;

void check_finite(const Dataset& ds) {
  for (const auto& rep : ds.replications) {
    for (double x : rep.final_action) {
      if (!std::isfinite(x)) throw NumericError("non-finite action in replication " + std::to_string(rep.replication));
    }
    for (const auto& r : rep.records) {
      if ((r.d_k && !std::isfinite(*r.d_k)) || (r.F_hat && !std::isfinite(*r.F_hat))) {
        throw NumericError("non-finite metric at k=" + std::to_string(r.k));
      }
    }
  }
}

void print_final(const Dataset& ds, std::ostream& os) {
  if (ds.summary.empty()) return;
  const auto& last = ds.summary.back();
  os << "k=" << last.k;
  if (last.D) os << " D=" << fmt_double(last.D->mean) << " +- " << fmt_double(last.D->std_error);
  if (last.F) os << " F=" << fmt_double(last.F->mean) << " +- " << fmt_double(last.F->std_error);
  os << " spread=" << fmt_double(last.mean_spread) << "\n";
}

int cmd_run(const std::string& config, const std::string& out, bool trace, bool svg) {
  const auto cfg = load_config(config);
  RunOptions opt;
  opt.trace = trace;
  const auto ds = run_experiment(cfg, opt);
  check_finite(ds);
  emit_outputs(ds, out, OutputFlags{svg});
  print_final(ds, std::cout);
  std::cout << "wrote " << out << "\n";
  return 0;
}

std::vector<nlohmann::json> parse_value_list(const std::string& list) {
  std::vector<nlohmann::json> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw ConfigError("empty value in --vary list");
    try {
      out.push_back(nlohmann::json::parse(item));
    } catch (const nlohmann::json::parse_error&) {
      out.emplace_back(item);  // bare word, treated as a string
    }
  }
  if (out.empty()) throw ConfigError("--vary needs at least one value");
  return out;
}

int cmd_sweep(const std::string& config, const std::string& vary, const std::string& out, bool svg) {
  const auto eq = vary.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--vary expects <param>=<v1,v2,...>");
  const std::string param = vary.substr(0, eq);
  const auto values = parse_value_list(vary.substr(eq + 1));
  const auto base = parse_json_text(read_text_file(config));
  for (const auto& v : values) {
    auto j = base;
    set_config_value(j, param, v);
    const auto cfg = config_from_json(j);
    const auto ds = run_experiment(cfg);
    check_finite(ds);
    const std::string label = v.is_string() ? v.get<std::string>() : v.dump();
    const auto dir = std::filesystem::path(out) / (param + "=" + label);
    emit_outputs(ds, dir, OutputFlags{svg});
    std::cout << param << "=" << label << ": ";
    print_final(ds, std::cout);
  }
  return 0;
}

int cmd_bounds(const std::string& config, std::uint64_t k_max, const std::string& out) {
  const auto cfg = load_config(config);
  const auto rep = bounds_report(cfg, k_max);
  if (out.empty()) {
    write_bounds_csv(std::cout, rep.envelope, rep.bias);
  } else {
    auto f = open_output(out);
    write_bounds_csv(f, rep.envelope, rep.bias);
  }
  if (rep.params) {
    const auto& p = *rep.params;
    std::cerr << "A=" << p.A << " B=" << p.B << " C=" << p.C << " K0=" << p.K0 << " K1=" << p.K1
              << " K2=" << p.K2 << "\n"
              << "eps1=" << p.eps1 << " eps2=" << p.eps2 << (p.eps2_tail_finite ? "" : " (tail unbounded)")
              << " eps3=" << p.eps3 << " eps4=" << p.eps4 << (p.eps4_tail_finite ? "" : " (tail unbounded)") << "\n"
              << "vartheta=" << p.vartheta << " varrho=" << p.varrho << " Xi=" << p.Xi
              << " exponent=" << p.th4_exponent() << (p.L_is_estimate ? " (L estimated)" : "") << "\n";
  }
  if (!rep.note.empty()) std::cerr << "note: " << rep.note << "\n";
  if (!rep.params || !rep.params->applicable()) return kExitInapplicable;
  return 0;
}

int cmd_verify(std::uint64_t seed) {
  const auto checks = run_verifier_suite(seed);
  bool all = true;
  for (const auto& c : checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    all = all && c.passed;
  }
  return all ? 0 : kExitCheckFailed;
}

int cmd_solve(const std::string& config, double tol, std::uint64_t max_iters, std::size_t samples,
              std::string out) {
  const auto cfg = load_config(config);
  if (out.empty()) out = cfg.optimum_file.empty() ? "optimum.json" : cfg.optimum_file;
  try {
    const auto r = solve_optimum(cfg, tol, max_iters, samples);
    write_optimum(out, r);
    std::cout << "grad_norm=" << fmt_double(r.grad_norm) << " iterations=" << r.iterations << " wrote " << out
              << "\n";
  } catch (const NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\nlast iterate:";
    for (double x : e.last_iterate()) std::cerr << ' ' << fmt_double(x);
    std::cerr << "\n";
    return kExitNumeric;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DOSP-S simulator and convergence-bound analysis"};
  app.require_subcommand(1);

  std::string config, out, vary, bounds_out, optimum_out;
  bool trace = false, no_svg = false;
  std::uint64_t k_max = 100000, seed = 7, max_iters = 5000;
  std::size_t samples = 2000;
  double tol = 1e-3;

  auto* run = app.add_subcommand("run", "run replications and write trajectory/summary CSV");
  run->add_option("--config", config, "config file")->required();
  run->add_option("--out", out, "output directory")->default_val("out");
  run->add_flag("--trace", trace, "write per-update trace CSV per replication");
  run->add_flag("--no-svg", no_svg, "skip SVG charts");

  auto* sweep = app.add_subcommand("sweep", "rerun a config over a list of values for one parameter");
  sweep->add_option("--config", config, "config file")->required();
  sweep->add_option("--vary", vary, "param=v1,v2,... (dotted path, e.g. network.q_reception=1,0.5)")->required();
  sweep->add_option("--out", out, "output directory")->default_val("out");
  sweep->add_flag("--no-svg", no_svg, "skip SVG charts");

  auto* bounds = app.add_subcommand("bounds", "write rate envelopes and bias diagnostics as CSV");
  bounds->add_option("--config", config, "config file")->required();
  bounds->add_option("--kmax", k_max, "largest slot")->required()->check(CLI::Range(std::uint64_t{2}, kMaxAveragedSlot));
  bounds->add_option("--out", bounds_out, "CSV path (default stdout)");

  auto* verify = app.add_subcommand("verify", "run the analytic-identity and property verifier suite");
  verify->add_option("--seed", seed, "seed for the Monte-Carlo checks");

  auto* solve = app.add_subcommand("solve-optimum", "compute a* by projected gradient ascent on a sample average");
  solve->add_option("--config", config, "config file")->required();
  solve->add_option("--tol", tol, "sup-norm gradient tolerance")->required()->check(CLI::PositiveNumber);
  solve->add_option("--max-iters", max_iters, "iteration cap");
  solve->add_option("--samples", samples, "sample-average size")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 30));
  solve->add_option("--out", optimum_out, "output path (default run.optimum_file)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, out, trace, !no_svg);
    if (*sweep) return cmd_sweep(config, vary, out, !no_svg);
    if (*bounds) return cmd_bounds(config, k_max, bounds_out);
    if (*verify) return cmd_verify(seed);
    if (*solve) return cmd_solve(config, tol, max_iters, samples, optimum_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
