#include <cmath>
#include <optional>

#include "kktstab/checks.hpp"
#include "kktstab/instance.hpp"
#include "kktstab/kkt.hpp"
#include "kktstab/newton.hpp"
#include "kktstab/rng.hpp"
#include "support.hpp"

using namespace kktstab;
using namespace kktstab::test;

namespace {

Instance fixture(const std::string& name) { return load_instance(resolve_instance_path(name)); }

NewtonTrace synthetic(std::initializer_list<double> norms) {
  NewtonTrace t;
  t.residual_norms = norms;
  t.step_lengths.assign(t.residual_norms.size() - 1, 1.0);
  t.min_singular_values.assign(t.residual_norms.size() - 1, 1.0);
  return t;
}

// Starts at distance r(k) = 0.5 (k + 1) / count from zbar along pseudo-random directions.
std::vector<KKTPoint> starts_around(const KKTPoint& zbar, int count, std::uint64_t seed) {
  Rng rng(seed);
  const int n = static_cast<int>(zbar.x.size());
  std::vector<KKTPoint> out;
  for (int k = 0; k < count; ++k) {
    const Vec dir = rng.unit_sphere(static_cast<int>(zbar.stacked().size()));
    out.push_back(KKTPoint::unstack(zbar.stacked() + 0.5 * (k + 1) / count * dir, n));
  }
  return out;
}

}  // namespace

TEST_CASE("options validation") {
  NewtonOptions ok;
  CHECK_NOTHROW(ok.validate());
  for (auto mutate : std::vector<std::function<void(NewtonOptions&)>>{
           [](NewtonOptions& o) { o.tol = 0; }, [](NewtonOptions& o) { o.max_iter = 0; },
           [](NewtonOptions& o) { o.armijo_c = -1; }, [](NewtonOptions& o) { o.backtrack_factor = 1.0; },
           [](NewtonOptions& o) { o.min_step = 0; },
           [](NewtonOptions& o) { o.regularization_floor = 0; }}) {
    NewtonOptions o;
    mutate(o);
    CHECK_THROWS_AS(o.validate(), PreconditionError);
  }
}

TEST_CASE("solve nlp_toy from (2, (1, 0.5))") {
  const Instance inst = fixture("nlp_toy");
  const KKTSolution sol = solve(inst.problem, {vec({2.0}), vec({1.0, 0.5})});
  CHECK(sol.trace.status == NewtonStatus::kConverged);
  CHECK(sol.trace.iterations() <= 10);
  CHECK(sol.trace.residual_norms.back() <= 1e-10);
  CHECK(dist(sol.z.stacked(), inst.known_solution->stacked()) <= 1e-9);
}

TEST_CASE("solve sdp_toy") {
  const Instance inst = fixture("sdp_toy");
  Vec mu0(4);
  mu0 << 1.0, svec(diag({-0.5, 0.1}));
  const KKTSolution sol = solve(inst.problem, {vec({0.3}), mu0});
  CHECK(sol.trace.residual_norms.back() <= 1e-10);
  Vec mu(4);
  mu << 1.0, svec(diag({-1.0, 0.0}));
  CHECK(dist(sol.z.x, vec({0.0})) <= 1e-9);
  CHECK(dist(sol.z.mu, mu) <= 1e-9);
}

TEST_CASE("exact start returns without iterating") {
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    const KKTSolution sol = solve(inst.problem, *inst.known_solution);
    CHECK(sol.trace.iterations() == 0);
    CHECK(sol.trace.residual_norms.size() == 1);
    CHECK(sol.z.stacked() == inst.known_solution->stacked());
  }
}

TEST_CASE("non-finite starts and failures carry the trace") {
  const Instance inst = fixture("nlp_toy");
  CHECK_THROWS_AS(solve(inst.problem, {vec({NAN}), vec({1.0, 1.0})}), PreconditionError);

  NewtonOptions one;
  one.max_iter = 1;
  one.tol = 1e-300;
  try {
    solve(fixture("degenerate_eq").problem, {vec({0.5}), vec({1.0, 0.3})}, one);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.trace().status == NewtonStatus::kMaxIterations);
    CHECK(e.trace().iterations() == 1);
    CHECK(e.last_iterate().size() == 3);
  }
}

TEST_CASE("local rate on strongly regular instances is quadratic") {
  for (const char* name : {"nlp_toy", "sdp_toy"}) {
    const Instance inst = fixture(name);
    int classified = 0;
    for (const auto& start : starts_around(*inst.known_solution, 10, 3)) {
      const KKTSolution sol = solve(inst.problem, start);
      try {
        const RateClass rc = local_rate(sol.trace);
        ++classified;
        INFO(name);
        CHECK(rc == RateClass::kQuadratic);
      } catch (const InsufficientData&) {
        // Finite termination leaves nothing to classify.
      }
    }
    CHECK(classified > 0);
  }
}

TEST_CASE("local rate on a degenerate solution is linear") {
  // Singular elements at the solution (F'(0) = 0, multipliers a half-line).
  const Instance inst = fixture("degenerate_eq");
  const KKTSolution sol = solve(inst.problem, *inst.start);
  CHECK(sol.trace.min_singular_values.back() < 1e-4);
  const RateClass rc = local_rate(sol.trace);
  CHECK((rc == RateClass::kLinear || rc == RateClass::kNone));
}

TEST_CASE("sdp_degenerate terminates finitely, so its rate is never linear") {
  // Piecewise-affine residual: Newton lands on a multiplier exactly.
  const Instance inst = fixture("sdp_degenerate");
  for (const auto& start : starts_around(*inst.known_solution, 10, 5)) {
    try {
      const KKTSolution sol = solve(inst.problem, start);
      CHECK(sol.trace.iterations() <= 5);
      std::optional<RateClass> rc;
      try {
        rc = local_rate(sol.trace);
      } catch (const InsufficientData&) {
      }
      if (rc) CHECK(*rc != RateClass::kLinear);
    } catch (const ConvergenceError& e) {
      CHECK(e.trace().status == NewtonStatus::kStagnation);
    }
  }
}

TEST_CASE("local rate on synthetic traces") {
  CHECK(local_rate(synthetic({0.5, 0.5, 0.5, 0.5, 0.5})) == RateClass::kNone);
  CHECK(local_rate(synthetic({1e-1, 1e-2, 1e-4, 1e-8, 1e-16})) == RateClass::kQuadratic);
  CHECK(local_rate(synthetic({0.5, 0.25, 0.125, 0.0625, 0.03125})) == RateClass::kLinear);
  CHECK(local_rate(synthetic({1e-1, 5e-3, 1e-4, 1e-6, 3e-9})) == RateClass::kSuperlinear);
  CHECK_THROWS_AS(local_rate(synthetic({1.0, 1e-20})), InsufficientData);
  CHECK_THROWS_AS(local_rate(synthetic({5.0, 2.0, 1e-3})), InsufficientData);
}

TEST_CASE("determinism") {
  for (const auto& name : positive_battery()) {
    const Instance inst = fixture(name);
    for (const auto& start : starts_around(*inst.known_solution, 4, 9)) {
      const KKTSolution a = solve(inst.problem, start), b = solve(inst.problem, start);
      CHECK(a.trace == b.trace);
      CHECK(a.z.stacked() == b.z.stacked());
    }
  }
}

TEST_CASE("merit decreases with the Armijo margin on accepted steps") {
  // Replays each run step by step (max_iter = k) to recover the accepted iterates.
  for (const char* name : {"nlp_toy", "sdp_toy", "smooth_control", "degenerate_eq"}) {
    const Instance inst = fixture(name);
    const KKTPoint start = starts_around(*inst.known_solution, 1, 11).front();
    const KKTSolution full = solve(inst.problem, start);
    NewtonOptions opts;
    Vec prev = start.stacked();
    for (int k = 1; k <= full.trace.iterations(); ++k) {
      opts.max_iter = k;
      Vec next;
      try {
        next = solve(inst.problem, start, opts).z.stacked();
      } catch (const ConvergenceError& e) {
        next = e.last_iterate();
      }
      const double m0 = 0.5 * residual(inst.problem, KKTPoint::unstack(prev, inst.problem.n())).squaredNorm();
      const double m1 = 0.5 * residual(inst.problem, KKTPoint::unstack(next, inst.problem.n())).squaredNorm();
      INFO(name << " step " << k);
      CHECK(m1 <= m0);
      CHECK(m1 <= m0 * (1.0 - 2.0 * opts.armijo_c * full.trace.step_lengths[k - 1]) + 1e-14 * (1.0 + m0));
      prev = next;
    }
  }
}

TEST_CASE("convergence from a grid of nearby starts on strongly regular instances") {
  for (const auto& name : positive_battery()) {
    const Instance inst = fixture(name);
    for (const auto& start : starts_around(*inst.known_solution, 10, 13)) {
      INFO(name);
      const KKTSolution sol = solve(inst.problem, start);
      CHECK(sol.trace.residual_norms.back() <= 1e-10);
    }
  }
}
