#include <cmath>

#include "kktstab/checks.hpp"
#include "kktstab/errors.hpp"
#include "kktstab/instance.hpp"
#include "kktstab/kkt.hpp"
#include "kktstab/prox.hpp"
#include "kktstab/rng.hpp"
#include "kktstab/stability.hpp"
#include "support.hpp"

using namespace kktstab;
using namespace kktstab::test;

namespace {

Instance fixture(const std::string& name) { return load_instance(resolve_instance_path(name)); }

struct Outer {
  Mat jac;
  Mat hull;
  Mat lineality;
};

// Blockwise descriptors at (F(xbar), mubar), stacked by hand.
Outer outer(const Instance& inst) {
  const auto& p = inst.problem;
  const KKTPoint& z = *inst.known_solution;
  const Vec f = p.F().eval(z.x);
  std::vector<Mat> hulls, lins;
  for (std::size_t b = 0; b < p.blocks().size(); ++b) {
    const int off = p.offset(b), d = p.blocks()[b].dim();
    const ConeDescriptor desc = cone_descriptors(p.blocks()[b], f.segment(off, d), z.mu.segment(off, d));
    hulls.push_back(desc.affine_hull_basis);
    lins.push_back(desc.lineality_basis);
  }
  return {p.F().jacobian(z.x), block_diagonal(hulls), block_diagonal(lins)};
}

// Gamma finite on every block of F'(xbar) d.
bool in_gamma_domain(const Instance& inst, const Vec& d) {
  const auto& p = inst.problem;
  const KKTPoint& z = *inst.known_solution;
  const Vec f = p.F().eval(z.x), v = p.F().jacobian(z.x) * d;
  for (std::size_t b = 0; b < p.blocks().size(); ++b) {
    const int off = p.offset(b), k = p.blocks()[b].dim();
    if (!gamma(p.blocks()[b], f.segment(off, k), z.mu.segment(off, k), v.segment(off, k)).finite()) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("verdict strings round-trip") {
  for (Verdict v : {Verdict::kHolds, Verdict::kFails, Verdict::kHeuristicLikely, Verdict::kUnsupported}) {
    CHECK(verdict_from_string(to_string(v)) == v);
  }
  CHECK_THROWS_AS(verdict_from_string("maybe"), ParseError);
  CHECK(to_string(Evidence::kFor) == "evidence-for");
  CHECK(to_string(Evidence::kCounterexample) == "counterexample-found");
}

TEST_CASE("analysis requires a KKT point") {
  const Instance inst = fixture("nlp_toy");
  const KKTPoint off{vec({1.5}), vec({1.0, 1.0})};
  CHECK_THROWS_AS(critical_subspace(inst.problem, off), PreconditionError);
  CHECK_THROWS_AS(nondegeneracy_check(inst.problem, off, 1e-8), PreconditionError);
  CHECK_THROWS_AS(equivalence_report(inst.problem, off), PreconditionError);
}

TEST_CASE("critical subspace examples") {
  CHECK(critical_subspace(fixture("sdp_toy").problem, *fixture("sdp_toy").known_solution).dim() == 0);
  CHECK(critical_subspace(fixture("nlp_toy").problem, *fixture("nlp_toy").known_solution).dim() == 0);
  // smooth_control sits in the interior of its constraint: no restriction on d.
  const Instance sc = fixture("smooth_control");
  CHECK(critical_subspace(sc.problem, *sc.known_solution).dim() == sc.problem.n());
}

TEST_CASE("critical subspace basis is orthonormal and maps into the hull") {
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    const CriticalSubspace cs = critical_subspace(inst.problem, *inst.known_solution);
    const Outer o = outer(inst);
    INFO(name);
    CHECK(dist(Mat(cs.basis.transpose() * cs.basis), Mat(Mat::Identity(cs.dim(), cs.dim()))) <= 1e-12);
    for (int k = 0; k < cs.dim(); ++k) {
      CHECK(projection_residual(Vec(o.jac * cs.basis.col(k)), o.hull) <= 1e-8);
    }
  }
}

TEST_CASE("nondegeneracy examples") {
  const double tol = 1e-8;
  auto verdict = [&](const char* name) {
    const Instance inst = fixture(name);
    return nondegeneracy_check(inst.problem, *inst.known_solution, tol);
  };
  CHECK(verdict("sdp_toy").verdict == Verdict::kHolds);
  CHECK(verdict("sdp_toy").tol == tol);
  CHECK(verdict("sdp_degenerate").verdict == Verdict::kFails);
  CHECK(verdict("l1_toy").verdict == Verdict::kHolds);

  // Hand rank: [F' | L] for sdp_toy is 4 x 4 of full rank.
  const Outer o = outer(fixture("sdp_toy"));
  Mat stacked(4, o.jac.cols() + o.lineality.cols());
  stacked << o.jac, o.lineality;
  CHECK(numerical_rank(stacked, 1e-10) == 4);
}

TEST_CASE("SRCQ examples") {
  auto srcq = [](const char* name, int budget) {
    const Instance inst = fixture(name);
    return srcq_check(inst.problem, *inst.known_solution, 1e-8, budget).verdict;
  };
  CHECK(srcq("nlp_toy", 100) == Verdict::kHolds);
  CHECK(srcq("sdp_degenerate", 100) == Verdict::kFails);
  CHECK(srcq("sdp_toy", 1000) == Verdict::kHeuristicLikely);
  CHECK(srcq("degenerate_eq", 100) == Verdict::kFails);
}

TEST_CASE("RCQ verdicts") {
  const Instance nlp = fixture("nlp_toy");
  CHECK(rcq_check(nlp.problem, *nlp.known_solution, 1e-8, 50).verdict == Verdict::kHolds);
  const Instance deg = fixture("degenerate_eq");
  CHECK(rcq_check(deg.problem, *deg.known_solution, 1e-8, 50).verdict == Verdict::kFails);
}

TEST_CASE("SSOSC examples") {
  for (const char* name : {"nlp_toy", "sdp_toy", "l1_toy"}) {
    const Instance inst = fixture(name);
    const SsoscResult r = ssosc_check(inst.problem, *inst.known_solution, 1e-8);
    INFO(name);
    CHECK(r.verdict == Verdict::kHolds);
    CHECK(r.subspace_dim == 0);
    CHECK(std::isinf(r.min_eigenvalue));
  }
  // smooth_control: f = 0.5 (x0 - 1)^2 + 0.5 (x1 - 2)^2 + const, reduced Hessian = I.
  const Instance sc = fixture("smooth_control");
  const SsoscResult r = ssosc_check(sc.problem, *sc.known_solution, 1e-8);
  CHECK(r.verdict == Verdict::kHolds);
  CHECK(r.subspace_dim == 2);
  CHECK(r.min_eigenvalue == doctest::Approx(1.0));

  const Instance deg = fixture("sdp_degenerate");
  CHECK_THROWS_AS(ssosc_check(deg.problem, *deg.known_solution, 1e-8), UnsupportedCase);
}

TEST_CASE("SSOSC is invariant under re-basing the critical subspace") {
  Rng rng(21);
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    if (!multiplier_unique(inst.problem, *inst.known_solution, 1e-8)) continue;
    const CriticalSubspace cs = critical_subspace(inst.problem, *inst.known_solution);
    if (cs.dim() == 0) continue;
    const SsoscResult base = ssosc_on_basis(inst.problem, *inst.known_solution, cs.basis, 1e-8);
    for (int t = 0; t < 5; ++t) {
      const Mat rotated = cs.basis * random_orthogonal(cs.dim(), rng);
      const SsoscResult r = ssosc_on_basis(inst.problem, *inst.known_solution, rotated, 1e-8);
      INFO(name);
      CHECK(r.verdict == base.verdict);
      CHECK(std::abs(r.min_eigenvalue - base.min_eigenvalue) <= 1e-10);
    }
  }
}

TEST_CASE("nondegeneracy implies a unique multiplier") {
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    if (nondegeneracy_check(inst.problem, *inst.known_solution, 1e-8).verdict != Verdict::kHolds) continue;
    INFO(name);
    CHECK(multiplier_unique(inst.problem, *inst.known_solution, 1e-8));
    // Kernel of the multiplier system: no nonzero w with J^T w = 0 orthogonal to the lineality.
    const Outer o = outer(inst);
    const Mat k = null_space(o.jac.transpose());
    if (k.cols() == 0) continue;
    const Mat lt = o.lineality.cols() > 0 ? Mat(o.lineality.transpose() * k) : Mat(Mat::Zero(1, k.cols()));
    CHECK(null_space(lt).cols() == 0);
  }
  CHECK_FALSE(multiplier_unique(fixture("sdp_degenerate").problem, *fixture("sdp_degenerate").known_solution,
                                1e-8));
}

TEST_CASE("under SRCQ the critical subspace is the Gamma domain") {
  Rng rng(22);
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    if (srcq_check(inst.problem, *inst.known_solution, 1e-8, 200).verdict != Verdict::kHolds) continue;
    const CriticalSubspace cs = critical_subspace(inst.problem, *inst.known_solution);
    const int n = inst.problem.n();
    const Mat comp = orthogonal_complement(cs.basis, n);
    INFO(name);
    for (int t = 0; t < 10; ++t) {
      const Vec inside = cs.dim() > 0 ? Vec(cs.basis * rng.normal_vector(cs.dim())) : Vec(Vec::Zero(n));
      CHECK(in_gamma_domain(inst, inside));
      if (comp.cols() > 0) {
        CHECK_FALSE(in_gamma_domain(inst, inside + comp * rng.normal_vector(static_cast<int>(comp.cols()))));
      }
    }
    const DomainComparison cmp = compare_critical_domain(inst.problem, *inst.known_solution, 32, 1);
    CHECK(cmp.residual <= 1e-8);
    CHECK(cmp.critical_dim == cmp.domain_dim);
  }
}

TEST_CASE("nonsingularity sweep examples") {
  const Instance l1 = fixture("l1_toy");
  const SweepStats a = nonsingularity_sweep(l1.problem, *l1.known_solution, 16, 1, 1e-8);
  CHECK_FALSE(a.singular_found);
  CHECK(a.status() == "all-sampled-nonsingular");
  CHECK(a.min_singular_value == doctest::Approx(1.0));

  const Instance deg = fixture("sdp_degenerate");
  const SweepStats b = nonsingularity_sweep(deg.problem, *deg.known_solution, 32, 1, 1e-8);
  CHECK(b.singular_found);
  CHECK(b.status() == "singular-element-found");

  const Instance nlp = fixture("nlp_toy");
  CHECK_FALSE(nonsingularity_sweep(nlp.problem, *nlp.known_solution, 32, 1, 1e-8).singular_found);
}

TEST_CASE("strong regularity probe examples") {
  const Instance l1 = fixture("l1_toy");
  const ProbeStats a = strong_regularity_probe(l1.problem, *l1.known_solution, 0.1, 30, 1);
  CHECK(a.violations == 0);
  CHECK(a.failures == 0);
  CHECK(a.modulus <= 2.0);
  CHECK(a.starts == 3);

  const Instance nlp = fixture("nlp_toy");
  const ProbeStats b = strong_regularity_probe(nlp.problem, *nlp.known_solution, 0.05, 30, 1);
  CHECK(b.violations == 0);
  CHECK(std::isfinite(b.modulus));
  CHECK(b.positive());

  const Instance deg = fixture("sdp_degenerate");
  const ProbeStats c = strong_regularity_probe(deg.problem, *deg.known_solution, 0.05, 20, 1);
  CHECK(c.violations + c.failures > 0);
  CHECK_FALSE(c.positive());
}

TEST_CASE("probe modulus is scale covariant on strongly regular instances") {
  for (const auto& name : positive_battery()) {
    const Instance inst = fixture(name);
    const ProbeStats small = strong_regularity_probe(inst.problem, *inst.known_solution, 0.05, 30, 4);
    const ProbeStats large = strong_regularity_probe(inst.problem, *inst.known_solution, 0.1, 30, 4);
    INFO(name);
    REQUIRE(std::isfinite(small.modulus));
    CHECK(std::abs(large.modulus - small.modulus) <= 0.2 * small.modulus);
  }
}

TEST_CASE("equivalence report examples") {
  for (const char* name : {"nlp_toy", "sdp_toy"}) {
    const Instance inst = fixture(name);
    const StabilityReport r = equivalence_report(inst.problem, *inst.known_solution);
    INFO(name);
    CHECK(r.leg_second_order);
    CHECK(r.leg_sweep);
    CHECK(r.leg_probe);
    CHECK(r.consistent);
    CHECK(r.disagreement.empty());
  }
  const Instance deg = fixture("sdp_degenerate");
  const StabilityReport r = equivalence_report(deg.problem, *deg.known_solution);
  CHECK_FALSE(r.leg_second_order);
  CHECK_FALSE(r.leg_sweep);
  CHECK_FALSE(r.leg_probe);
  CHECK(r.consistent);
  CHECK(r.ssosc.verdict == Verdict::kUnsupported);
  CHECK_FALSE(r.multiplier_unique);
}

TEST_CASE("every battery instance gives a consistent report") {
  for (const auto& name : battery_names()) {
    const Instance inst = fixture(name);
    const StabilityReport r = equivalence_report(inst.problem, *inst.known_solution);
    INFO(name << ": " << r.disagreement);
    CHECK(r.consistent);
    CHECK(r.rcq.tol == 1e-8);
    CHECK(r.srcq.tol == 1e-8);
    CHECK(r.nondegeneracy.tol == 1e-8);
    CHECK(r.ssosc.tol == 1e-8);
    CHECK(r.sweep.tol == 1e-8);
  }
}

TEST_CASE("reports are deterministic under a fixed seed") {
  const Instance inst = fixture("psd_proj");
  StabilityOptions opts;
  opts.seed = 17;
  CHECK(equivalence_report(inst.problem, *inst.known_solution, opts) ==
        equivalence_report(inst.problem, *inst.known_solution, opts));
}

TEST_CASE("assumption evidence examples") {
  Rng rng(23);
  // PSD blocks of the battery.
  for (const char* name : {"sdp_toy", "psd_proj", "sdp_degenerate"}) {
    const Instance inst = fixture(name);
    const Vec f = inst.problem.F().eval(inst.known_solution->x);
    const ConvexPiece& lift = inst.problem.blocks().front();
    const auto& inner = *lift.as<EpiLift>()->inner;
    const int d = inner.dim();
    const AssumptionReport r =
        assumption_check(inner, f.tail(d), inst.known_solution->mu.tail(d), 32, 1e-8, 1);
    INFO(name);
    CHECK(r.all_for());
  }
  // Orthant at a strictly complementary point.
  const ConvexPiece orth = ConvexPiece::orthant(2, OrthantSign::kNonNegative);
  CHECK(assumption_check(orth, vec({1.0, 0.0}), vec({0.0, -2.0}), 16, 1e-8).all_for());
  // l1 at a kink.
  const AssumptionReport k = assumption_check(ConvexPiece::l1(1), vec({0.0}), vec({1.0}), 16, 1e-8);
  CHECK(k.all_for());
  CHECK(k.elements >= 2);

  CHECK_THROWS_AS(assumption_check(ConvexPiece::l1(1), vec({0.0}), vec({2.0}), 16, 1e-8), PreconditionError);
}
