#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <optional>
#include <ostream>

#include "kktstab/checks.hpp"
#include "kktstab/instance.hpp"
#include "kktstab/kkt.hpp"
#include "kktstab/newton.hpp"
#include "kktstab/report.hpp"
#include "kktstab/stability.hpp"

namespace kktstab::cli {

namespace {

using nlohmann::json;

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(real_to_json(v[i]));
  return out;
}

json point_json(const KKTPoint& z) { return {{"x", vec_json(z.x)}, {"mu", vec_json(z.mu)}}; }

std::string vec_text(const Vec& v) {
  std::ostringstream s;
  s << std::setprecision(10) << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  s << ")";
  return s.str();
}

std::uint64_t env_seed() {
  const char* env = std::getenv("KKTSTAB_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used == std::string(env).size()) return v;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError("KKTSTAB_SEED", "must be a non-negative integer");
}

KKTPoint analysis_point(const Instance& inst, const std::string& at) {
  if (!at.empty()) return parse_point(at, inst.problem.n(), inst.problem.m());
  if (!inst.known_solution) {
    throw PreconditionError("instance '" + inst.name + "' has no known_solution; pass --at");
  }
  return *inst.known_solution;
}

void write_json(const std::string& path, const json& doc) {
  if (!path.empty()) emit_report(doc, path);
}

struct Common {
  std::string instance;
  std::string json_path;
  std::uint64_t seed = 0;
};

int do_solve(const Common& c, double tol, int max_iter, const std::string& start_text,
             std::ostream& out) {
  const Instance inst = load_instance(resolve_instance_path(c.instance));
  NewtonOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  KKTPoint start{Vec::Zero(inst.problem.n()), Vec::Zero(inst.problem.m())};
  if (!start_text.empty()) {
    start = parse_point(start_text, inst.problem.n(), inst.problem.m());
  } else if (inst.start) {
    start = *inst.start;
  }
  const json tolerances = {{"tol", tol}, {"max_iter", max_iter}, {"armijo_c", opts.armijo_c},
                           {"min_step", opts.min_step}};
  try {
    const KKTSolution sol = solve(inst.problem, start, opts);
    std::string rate;
    try {
      rate = to_string(local_rate(sol.trace));
    } catch (const InsufficientData&) {
      rate = "insufficient-data";
    }
    out << kToolName << " " << kToolVersion << " solve " << inst.name << "\n"
        << "status: converged in " << sol.trace.iterations() << " iterations\n"
        << "x  = " << vec_text(sol.z.x) << "\n"
        << "mu = " << vec_text(sol.z.mu) << "\n"
        << "final residual (inf-norm): " << sol.trace.residual_norms.back() << "\n"
        << "local rate: " << rate << "\n";
    write_json(c.json_path, make_report("solve", c.seed, tolerances,
                                        {{"instance", inst.name},
                                         {"solution", point_json(sol.z)},
                                         {"trace", to_json(sol.trace)},
                                         {"local_rate", rate}}));
    return kExitOk;
  } catch (const ConvergenceError& e) {
    out << kToolName << " " << kToolVersion << " solve " << inst.name << "\n"
        << "status: " << to_string(e.trace().status) << "\n";
    write_json(c.json_path,
               make_report("solve", c.seed, tolerances,
                           {{"instance", inst.name},
                            {"last_iterate", point_json(KKTPoint::unstack(e.last_iterate(),
                                                                          inst.problem.n()))},
                            {"trace", to_json(e.trace())},
                            {"error", e.what()}}));
    throw;
  }
}

void print_report(const StabilityReport& r, std::ostream& out) {
  out << "RCQ:            " << to_string(r.rcq.verdict) << " [" << r.rcq.method << ", tol "
      << r.rcq.tol << "]\n"
      << "SRCQ:           " << to_string(r.srcq.verdict) << " [" << r.srcq.method << ", tol "
      << r.srcq.tol << "]\n"
      << "nondegeneracy:  " << to_string(r.nondegeneracy.verdict) << " [tol "
      << r.nondegeneracy.tol << "]\n"
      << "multiplier:     " << (r.multiplier_unique ? "unique" : "not unique") << "\n"
      << "critical dim:   " << r.critical_dim << "\n"
      << "SSOSC:          " << to_string(r.ssosc.verdict) << " (min eigenvalue "
      << r.ssosc.min_eigenvalue << ", tol " << r.ssosc.tol << ")\n"
      << "sweep:          " << r.sweep.status() << " (" << r.sweep.elements
      << " elements, min singular value " << r.sweep.min_singular_value << ", tol "
      << r.sweep.tol << ")\n"
      << "probe:          modulus " << r.probe.modulus << ", violations " << r.probe.violations
      << ", failures " << r.probe.failures << " over " << r.probe.num_delta
      << " perturbations (radius " << r.probe.radius << ")\n"
      << "legs:           second-order " << (r.leg_second_order ? "+" : "-") << ", sweep "
      << (r.leg_sweep ? "+" : "-") << ", probe " << (r.leg_probe ? "+" : "-") << "\n"
      << "consistency:    " << (r.consistent ? "consistent" : "inconsistent (" + r.disagreement + ")")
      << "\n";
}

int do_analyze(const Common& c, const std::string& at, const StabilityOptions& opts,
               std::ostream& out) {
  const Instance inst = load_instance(resolve_instance_path(c.instance));
  const KKTPoint z = analysis_point(inst, at);
  const StabilityReport r = equivalence_report(inst.problem, z, opts);
  out << kToolName << " " << kToolVersion << " analyze " << inst.name << " (seed " << c.seed
      << ")\n";
  print_report(r, out);
  const json tolerances = {{"tol", opts.tol},
                           {"samples", opts.samples},
                           {"srcq_budget", opts.srcq_budget},
                           {"probe_radius", opts.probe_radius},
                           {"num_delta", opts.num_delta},
                           {"uniqueness_threshold", opts.uniqueness_threshold}};
  write_json(c.json_path, make_report("analyze", c.seed, tolerances,
                                      {{"instance", inst.name},
                                       {"point", point_json(z)},
                                       {"report", to_json(r)}}));
  return r.consistent ? kExitOk : kExitInconsistent;
}

int do_probe(const Common& c, const std::string& at, double radius, int num_delta,
             std::ostream& out) {
  const Instance inst = load_instance(resolve_instance_path(c.instance));
  const KKTPoint z = analysis_point(inst, at);
  const ProbeStats p = strong_regularity_probe(inst.problem, z, radius, num_delta, c.seed);
  out << kToolName << " " << kToolVersion << " probe " << inst.name << " (seed " << c.seed << ")\n"
      << "modulus estimate: " << p.modulus << "\n"
      << "violations: " << p.violations << ", failures: " << p.failures << " over " << num_delta
      << " perturbations x " << p.starts << " starts\n";
  write_json(c.json_path, make_report("probe", c.seed,
                                      {{"radius", radius}, {"threshold", p.threshold}},
                                      {{"instance", inst.name},
                                       {"point", point_json(z)},
                                       {"probe", to_json(p)}}));
  return kExitOk;
}

int do_verify(const Common& c, const std::string& suite, std::ostream& out) {
  std::vector<SuiteReport> suites;
  if (suite == "prox" || suite == "all") suites.push_back(run_prox_suite(c.seed));
  if (suite == "kkt" || suite == "all") suites.push_back(run_kkt_suite(c.seed));
  out << kToolName << " " << kToolVersion << " verify --suite " << suite << " (seed " << c.seed
      << ")\n";
  bool ok = true;
  json result = json::array();
  for (const auto& s : suites) {
    for (const auto& chk : s.checks) {
      out << "[" << (chk.passed ? "PASS" : "FAIL") << "] " << s.suite << ": " << chk.name << " - "
          << chk.detail << "\n";
      result.push_back({{"suite", s.suite},
                        {"name", chk.name},
                        {"passed", chk.passed},
                        {"detail", chk.detail}});
    }
    ok = ok && s.passed();
  }
  write_json(c.json_path, make_report("verify", c.seed, json::object(),
                                      {{"suite", suite}, {"checks", result}, {"passed", ok}}));
  return ok ? kExitOk : kExitInconsistent;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability analysis for composite optimization KKT systems", "kktstab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

  Common common;
  double tol = 1e-10;
  int max_iter = 100;
  std::string start, at, suite = "all";
  StabilityOptions sopts;
  double radius = 0.05;
  int num_delta = 50;

  auto add_common = [&](CLI::App* sub, bool with_instance) {
    if (with_instance) {
      sub->add_option("instance", common.instance, "Instance file or battery name")->required();
    }
    sub->add_option("--seed", common.seed, "Random seed (default: $KKTSTAB_SEED or 0)");
    sub->add_option("--json", common.json_path, "Write a machine-readable report to this path");
  };

  auto* solve_cmd = app.add_subcommand("solve", "Solve the KKT system by semismooth Newton");
  add_common(solve_cmd, true);
  solve_cmd->add_option("--tol", tol, "Residual tolerance (inf-norm)")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-iter", max_iter, "Iteration limit")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--start", start, "Starting point 'x0,..;mu0,..'");

  auto* analyze_cmd = app.add_subcommand("analyze", "Run the stability checks and cross-check");
  add_common(analyze_cmd, true);
  analyze_cmd->add_option("--at", at, "KKT point 'x0,..;mu0,..' (default: known solution)");
  analyze_cmd->add_option("--samples", sopts.samples, "Sampled Jacobian elements")
      ->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--tol", sopts.tol, "Decision tolerance")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--radius", sopts.probe_radius, "Probe radius")->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--num-delta", sopts.num_delta, "Probe perturbations")
      ->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--budget", sopts.srcq_budget, "Restarts for the polar-point search")
      ->check(CLI::PositiveNumber);

  auto* probe_cmd = app.add_subcommand("probe", "Empirical strong-regularity probe");
  add_common(probe_cmd, true);
  probe_cmd->add_option("--at", at, "KKT point 'x0,..;mu0,..' (default: known solution)");
  probe_cmd->add_option("--radius", radius, "Perturbation radius")->check(CLI::PositiveNumber);
  probe_cmd->add_option("--num-delta", num_delta, "Number of perturbations")
      ->check(CLI::PositiveNumber);

  auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suites");
  add_common(verify_cmd, false);
  verify_cmd->add_option("--suite", suite, "Suite to run")
      ->check(CLI::IsMember({"prox", "kkt", "all"}));

  try {
    common.seed = env_seed();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) return do_solve(common, tol, max_iter, start, out);
    sopts.seed = common.seed;
    if (analyze_cmd->parsed()) return do_analyze(common, at, sopts, out);
    if (probe_cmd->parsed()) return do_probe(common, at, radius, num_delta, out);
    if (verify_cmd->parsed()) return do_verify(common, suite, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace kktstab::cli
