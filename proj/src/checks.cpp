#include "kktstab/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>

#include "kktstab/instance.hpp"
#include "kktstab/kkt.hpp"
#include "kktstab/newton.hpp"
#include "kktstab/prox.hpp"
#include "kktstab/report.hpp"
#include "kktstab/rng.hpp"
#include "kktstab/stability.hpp"

#ifndef KKTSTAB_FIXTURE_DIR
#define KKTSTAB_FIXTURE_DIR "fixtures"
#endif

namespace kktstab {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CheckOutcome timed(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckOutcome out{name, false, "", 0.0};
  try {
    auto [ok, detail] = body();
    out.passed = ok;
    out.detail = std::move(detail);
  } catch (const std::exception& e) {
    out.detail = std::string("error: ") + e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<ConvexPiece> sample_pieces() {
  Vec lo(3), hi(3);
  lo << -1.0, 0.0, -INFINITY;
  hi << 1.0, 0.0, 2.0;
  return {ConvexPiece::psd(3),
          ConvexPiece::psd(2),
          ConvexPiece::orthant(4, OrthantSign::kNonNegative),
          ConvexPiece::orthant(3, OrthantSign::kNonPositive),
          ConvexPiece::box(lo, hi),
          ConvexPiece::l1(4),
          ConvexPiece::epi_lift(ConvexPiece::psd(2)),
          ConvexPiece::epi_lift(ConvexPiece::l1(2)),
          ConvexPiece::epi_lift(ConvexPiece::orthant(2, OrthantSign::kNonPositive))};
}

// Random point whose entries sometimes land exactly on kinks.
Vec random_point(const ConvexPiece& piece, Rng& rng) {
  Vec z = 2.0 * rng.normal_vector(piece.dim());
  if (rng.uniform() < 0.3) {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (rng.uniform() < 0.5) z[i] = std::round(z[i]);
    }
  }
  return z;
}

// (xbar, ubar) for the PSD piece with prescribed eigenvalue group sizes.
std::pair<Vec, Vec> psd_pair(int order, int pos, int zero, Rng& rng) {
  const Mat q = random_orthogonal(order, rng);
  Vec plus = Vec::Zero(order), minus = Vec::Zero(order);
  for (int i = 0; i < order; ++i) {
    if (i < pos) {
      plus[i] = rng.uniform(0.5, 3.0);
    } else if (i >= pos + zero) {
      minus[i] = -rng.uniform(0.5, 3.0);
    }
  }
  return {svec(q * plus.asDiagonal() * q.transpose()), svec(q * minus.asDiagonal() * q.transpose())};
}

struct BatteryPoint {
  std::string label;
  ConvexPiece piece;
  Vec xbar;
  Vec ubar;
};

// Every block of every fixture at its known solution, with the inner piece of epigraph lifts.
std::vector<BatteryPoint> battery_points() {
  std::vector<BatteryPoint> out;
  for (const auto& name : battery_names()) {
    const Instance inst = load_instance(resolve_instance_path(name));
    if (!inst.known_solution) continue;
    const auto& p = inst.problem;
    const Vec f = p.F().eval(inst.known_solution->x);
    for (std::size_t b = 0; b < p.blocks().size(); ++b) {
      const auto& piece = p.blocks()[b];
      const int off = p.offset(b), d = piece.dim();
      const Vec xb = f.segment(off, d), ub = inst.known_solution->mu.segment(off, d);
      out.push_back({name + "/" + piece.describe(), piece, xb, ub});
      if (const auto* lift = piece.as<EpiLift>()) {
        out.push_back({name + "/" + lift->inner->describe(), *lift->inner, xb.tail(d - 1),
                       ub.tail(d - 1)});
      }
    }
  }
  return out;
}

std::vector<KKTPoint> gridded_starts(const KKTPoint& center, int count, double radius) {
  const auto n = center.x.size(), m = center.mu.size();
  std::vector<KKTPoint> out;
  for (int k = 0; k < count; ++k) {
    Vec dir(n + m);
    for (Eigen::Index i = 0; i < dir.size(); ++i) {
      dir[i] = std::cos(2.0 * M_PI * (k + 1) * (static_cast<double>(i) + 1.0) / 11.0 + 0.3 * k);
    }
    const Vec z = center.stacked() + radius * (k + 1) / count * dir.normalized();
    out.push_back(KKTPoint::unstack(z, static_cast<int>(n)));
  }
  return out;
}

}  // namespace

bool SuiteReport::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::string default_fixture_dir() {
  if (const char* env = std::getenv("KKTSTAB_FIXTURE_DIR"); env && *env) return env;
  return KKTSTAB_FIXTURE_DIR;
}

std::string resolve_instance_path(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return name_or_path;
  if (name_or_path.find('/') == std::string::npos) {
    const fs::path candidate = fs::path(default_fixture_dir()) / (name_or_path + ".json");
    if (fs::exists(candidate)) return candidate.string();
  }
  return name_or_path;
}

const std::vector<std::string>& battery_names() {
  static const std::vector<std::string> names{"nlp_toy",  "sdp_toy", "sdp_degenerate",
                                              "l1_toy",   "smooth_control", "psd_proj",
                                              "l1_kink",  "box_kink", "degenerate_eq"};
  return names;
}

const std::vector<std::string>& positive_battery() {
  static const std::vector<std::string> names{"nlp_toy", "sdp_toy", "l1_toy"};
  return names;
}

const std::vector<std::string>& negative_battery() {
  static const std::vector<std::string> names{"sdp_degenerate"};
  return names;
}

CheckOutcome check_prox_identities(std::uint64_t seed) {
  return timed("prox identities", [&] {
    double moreau_unit = 0.0, moreau_scaled = 0.0, expansion = 0.0;
    int k = 0;
    for (const auto& piece : sample_pieces()) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k++)));
      for (int t = 0; t < 1000; ++t) {
        const Vec z = random_point(piece, rng);
        const Vec y = random_point(piece, rng);
        moreau_unit = std::max(
            moreau_unit, (prox(piece, z) + prox_conjugate(piece, z) - z).lpNorm<Eigen::Infinity>());
        for (double s : {0.1, 10.0}) {
          const Vec back = prox(piece, z, s) + s * prox_conjugate(piece, z / s, 1.0 / s);
          moreau_scaled = std::max(moreau_scaled, (back - z).lpNorm<Eigen::Infinity>());
        }
        const double grow = (prox(piece, z) - prox(piece, y)).norm() - (z - y).norm();
        expansion = std::max(expansion, grow);
      }
    }
    const bool ok = moreau_unit <= 1e-12 && moreau_scaled <= 1e-10 && expansion <= 1e-12;
    return std::pair{ok, "moreau(sigma=1) " + fmt("%.3g", moreau_unit) + ", moreau(sigma=0.1,10) " +
                             fmt("%.3g", moreau_scaled) + ", max expansion " +
                             fmt("%.3g", expansion)};
  });
}

CheckOutcome check_element_properties(std::uint64_t seed) {
  return timed("generalized Jacobian elements", [&] {
    std::vector<std::pair<ConvexPiece, Vec>> points;
    for (const auto& bp : battery_points()) points.emplace_back(bp.piece, bp.xbar + bp.ubar);
    Rng pick(seed);
    for (const auto& piece : sample_pieces()) {
      for (int t = 0; t < 4; ++t) points.emplace_back(piece, random_point(piece, pick));
    }
    double worst_inner = 0.0, worst_spec = 0.0, worst_sym = 0.0;
    int elements = 0;
    std::uint64_t stream = 0;
    for (const auto& [piece, z] : points) {
      Rng rng(derive_seed(seed, 1000 + stream));
      for (const auto& u : sample_clarke(piece, z, 32, derive_seed(seed, stream++))) {
        ++elements;
        worst_sym = std::max(worst_sym, (u.matrix - u.matrix.transpose()).norm());
        const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(u.matrix).eigenvalues();
        worst_spec = std::max({worst_spec, -ev.minCoeff(), ev.maxCoeff() - 1.0});
        for (int t = 0; t < 100; ++t) {
          const Vec d = rng.normal_vector(piece.dim());
          const Vec ud = u.matrix * d;
          worst_inner = std::max(worst_inner, -ud.dot(d - ud));
        }
      }
    }
    const bool ok = worst_inner <= 1e-10 && worst_spec <= 1e-10 && worst_sym <= 1e-12;
    return std::pair{ok, std::to_string(elements) + " elements, min <Ud,d-Ud> " +
                             fmt("%.3g", -worst_inner) + ", spectrum excess " +
                             fmt("%.3g", worst_spec)};
  });
}

CheckOutcome check_psd_derivative_and_gamma(std::uint64_t seed) {
  return timed("PSD derivative and Gamma", [&] {
    Rng rng(seed);
    const ConvexPiece piece = ConvexPiece::psd(3);
    double fd_err = 0.0;
    for (int t = 0; t < 100; ++t) {
      // Well-separated spectrum: gaps of at least 0.5, with an exact zero half the time.
      const Mat q = random_orthogonal(3, rng);
      Vec lam(3);
      const double middle = rng.uniform(0.1, 0.25) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      lam << rng.uniform(0.5, 2.0), (t % 2 == 0) ? 0.0 : middle, -rng.uniform(1.0, 2.5);
      const Vec z = svec(q * lam.asDiagonal() * q.transpose());
      const Vec d = rng.normal_vector(6);
      const double h = 1e-7;
      const Vec fd = (prox(piece, z + h * d) - prox(piece, z)) / h;
      const Vec dd = prox_dirderiv(piece, z, d);
      fd_err = std::max(fd_err, (fd - dd).norm() / std::max(1.0, dd.norm()));
    }
    double gamma_err = 0.0;
    int both_inf = 0, finite_in = 0;
    for (int t = 0; t < 200; ++t) {
      const int pos = 1 + rng.below(2), zero = rng.below(3 - pos);
      const auto [xb, ub] = psd_pair(3, pos, zero, rng);
      const ConeDescriptor desc = cone_descriptors(piece, xb, ub);
      const auto samples = sample_clarke(piece, xb + ub, 32, derive_seed(seed, 50 + t));
      Vec v = desc.affine_hull_basis * rng.normal_vector(static_cast<int>(desc.affine_hull_basis.cols()));
      const bool outside = t >= 100;
      if (outside) {
        const Mat comp = orthogonal_complement(desc.affine_hull_basis, 6);
        if (comp.cols() == 0) {
          ++both_inf;  // the hull is everything; nothing lies outside
          continue;
        }
        v += 0.5 * comp * rng.unit_sphere(static_cast<int>(comp.cols()));
      }
      const ExtendedValue closed = gamma(piece, xb, ub, v);
      const ExtendedValue oracle = gamma_oracle(piece, xb, ub, v, samples);
      if (outside) {
        if (!closed.finite() && !oracle.finite()) ++both_inf;
      } else if (closed.finite() && oracle.finite()) {
        ++finite_in;
        gamma_err = std::max(gamma_err, std::abs(closed.value - oracle.value) /
                                            (1.0 + std::abs(closed.value)));
      }
    }
    const bool ok = fd_err <= 1e-5 && gamma_err <= 1e-8 && both_inf == 100 && finite_in == 100;
    return std::pair{ok, "derivative vs finite differences " + fmt("%.3g", fd_err) +
                             ", Gamma vs oracle " + fmt("%.3g", gamma_err) + " (" +
                             std::to_string(finite_in) + "/100 finite), both +inf on " +
                             std::to_string(both_inf) + "/100"};
  });
}

CheckOutcome check_newton_local() {
  return timed("Newton local convergence", [&] {
    std::ostringstream detail;
    bool ok = true;
    double worst = 0.0;
    for (const auto& name : positive_battery()) {
      const Instance inst = load_instance(resolve_instance_path(name));
      int quadratic = 0, classified = 0, converged = 0;
      for (const auto& start : gridded_starts(*inst.known_solution, 10, 0.5)) {
        try {
          const KKTSolution sol = solve(inst.problem, start);
          ++converged;
          worst = std::max(worst, sol.trace.residual_norms.back());
          try {
            const RateClass rc = local_rate(sol.trace);
            ++classified;
            if (rc == RateClass::kQuadratic) ++quadratic;
          } catch (const InsufficientData&) {
          }
        } catch (const ConvergenceError&) {
        }
      }
      const bool rate_needed = name != "l1_toy";
      const bool rate_ok = !rate_needed || (classified > 0 && quadratic == classified);
      ok = ok && converged == 10 && rate_ok;
      detail << name << ": " << converged << "/10 converged";
      if (rate_needed) detail << ", quadratic " << quadratic << "/" << classified << " classified";
      detail << "; ";
    }
    ok = ok && worst <= 1e-10;
    detail << "max final residual " << fmt("%.3g", worst);
    return std::pair{ok, detail.str()};
  });
}

CheckOutcome check_equivalence(std::uint64_t seed) {
  return timed("equivalence cross-check", [&] {
    std::ostringstream detail;
    bool ok = true;
    StabilityOptions opts;
    opts.seed = seed;
    for (const auto& name : positive_battery()) {
      const Instance inst = load_instance(resolve_instance_path(name));
      const StabilityReport r = equivalence_report(inst.problem, *inst.known_solution, opts);
      const bool good = r.consistent && r.leg_second_order && r.leg_sweep && r.leg_probe &&
                        r.sweep.min_singular_value > 1e-6;
      ok = ok && good;
      detail << name << (good ? " positive" : " UNEXPECTED") << " (min sigma "
             << fmt("%.3g", r.sweep.min_singular_value) << ", modulus "
             << fmt("%.3g", r.probe.modulus) << "); ";
    }
    for (const auto& name : negative_battery()) {
      const Instance inst = load_instance(resolve_instance_path(name));
      const StabilityReport r = equivalence_report(inst.problem, *inst.known_solution, opts);
      const bool good = r.consistent && r.nondegeneracy.verdict == Verdict::kFails &&
                        r.sweep.singular_found && r.sweep.min_singular_value <= 1e-8 &&
                        (r.probe.violations > 0 || r.probe.failures > 0);
      ok = ok && good;
      detail << name << (good ? " negative" : " UNEXPECTED") << " (violations "
             << r.probe.violations << ", failures " << r.probe.failures << ")";
    }
    return std::pair{ok, detail.str()};
  });
}

CheckOutcome check_critical_domain(std::uint64_t seed) {
  return timed("critical subspace vs Gamma domain", [&] {
    std::ostringstream detail;
    bool ok = true;
    int compared = 0;
    for (const auto& name : battery_names()) {
      const Instance inst = load_instance(resolve_instance_path(name));
      const CheckResult srcq = srcq_check(inst.problem, *inst.known_solution, 1e-8, 200, seed);
      if (srcq.verdict == Verdict::kFails) continue;
      const DomainComparison c = compare_critical_domain(inst.problem, *inst.known_solution, 32, seed);
      ++compared;
      const bool good = c.residual <= 1e-8 && c.gamma_domain_misses == 0;
      ok = ok && good;
      detail << name << " dim " << c.critical_dim << "/" << c.domain_dim << " residual "
             << fmt("%.2g", c.residual) << "; ";
    }
    detail << compared << " instances compared";
    return std::pair{ok && compared > 0, detail.str()};
  });
}

CheckOutcome check_assumptions(std::uint64_t seed) {
  return timed("range/null-space and Gamma attainment", [&] {
    std::ostringstream detail;
    bool ok = true;
    int checked = 0;
    std::uint64_t stream = 0;
    auto run = [&](const std::string& label, const ConvexPiece& piece, const Vec& xb, const Vec& ub) {
      const AssumptionReport r = assumption_check(piece, xb, ub, 32, 1e-8, derive_seed(seed, stream++));
      ++checked;
      if (!r.all_for()) {
        ok = false;
        detail << label << ": counterexample (range " << fmt("%.2g", r.range_residual)
               << ", null " << fmt("%.2g", r.null_residual) << ", gamma "
               << fmt("%.2g", r.gamma_gap) << "); ";
      }
    };
    for (const auto& bp : battery_points()) run(bp.label, bp.piece, bp.xbar, bp.ubar);
    Rng rng(seed);
    for (int t = 0; t < 20; ++t) {
      const int order = 2 + t % 3;
      const int pos = rng.below(order + 1);
      const auto [xb, ub] = psd_pair(order, pos, rng.below(order - pos + 1), rng);
      run("random psd " + std::to_string(order), ConvexPiece::psd(order), xb, ub);
    }
    detail << checked << " points checked";
    return std::pair{ok, detail.str()};
  });
}

CheckOutcome check_determinism(std::uint64_t seed) {
  return timed("determinism", [&] {
    bool ok = true;
    StabilityOptions opts;
    opts.seed = seed;
    opts.num_delta = 10;
    for (const auto& name : {"nlp_toy", "sdp_toy", "sdp_degenerate"}) {
      const Instance inst = load_instance(resolve_instance_path(name));
      auto emit = [&] {
        const StabilityReport r = equivalence_report(inst.problem, *inst.known_solution, opts);
        return canonical_dump(make_report("analyze", seed, {{"tol", 1e-8}}, to_json(r)));
      };
      ok = ok && emit() == emit();
      const KKTPoint start = gridded_starts(*inst.known_solution, 3, 0.3).back();
      auto trace = [&] {
        try {
          return canonical_dump(to_json(solve(inst.problem, start).trace));
        } catch (const ConvergenceError& e) {
          return canonical_dump(to_json(e.trace()));
        }
      };
      ok = ok && trace() == trace();
    }
    return std::pair{ok, std::string(ok ? "repeated reports byte-identical" : "reports differ")};
  });
}

CheckOutcome check_known_solutions() {
  return timed("battery known solutions", [&] {
    std::ostringstream detail;
    bool ok = true;
    for (const auto& name : battery_names()) {
      const Instance inst = load_instance(resolve_instance_path(name));
      const bool good = inst.known_solution &&
                        kkt_check(inst.problem, *inst.known_solution, 1e-8).satisfied;
      ok = ok && good;
      if (!good) detail << name << " fails; ";
    }
    detail << battery_names().size() << " fixtures loaded";
    return std::pair{ok, detail.str()};
  });
}

SuiteReport run_prox_suite(std::uint64_t seed) {
  return {"prox",
          {check_prox_identities(seed), check_element_properties(seed),
           check_psd_derivative_and_gamma(seed), check_assumptions(seed)}};
}

SuiteReport run_kkt_suite(std::uint64_t seed) {
  return {"kkt",
          {check_known_solutions(), check_newton_local(), check_equivalence(seed),
           check_critical_domain(seed), check_determinism(seed)}};
}

}  // namespace kktstab
