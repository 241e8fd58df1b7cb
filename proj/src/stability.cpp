#include "kktstab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "kktstab/rng.hpp"

namespace kktstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kApIterations = 200;
constexpr int kMaxEnumerated = 20;

// Blockwise data of g at (F(x), mu), stacked over the blocks.
struct OuterSide {
  Vec fbar;
  Mat jac;
  Mat hull;
  Mat lineality;
  StructuredSet critical;
  StructuredSet subdiff;
  StructuredSet domain_normal;
  Mat gamma_form;
};

OuterSide outer_side(const CompositeProblem& problem, const KKTPoint& zbar) {
  const KktCheck check = kkt_check(problem, zbar, 1e-8);
  if (!check.satisfied) {
    throw PreconditionError("point is not a KKT point (stationarity " +
                            std::to_string(check.stationarity_norm) + ", prox residual " +
                            std::to_string(check.prox_norm) + ")");
  }
  OuterSide s;
  const int m = problem.m();
  s.fbar = problem.F().eval(zbar.x);
  s.jac = problem.F().jacobian(zbar.x);
  s.critical = StructuredSet(m);
  s.subdiff = StructuredSet(m);
  s.domain_normal = StructuredSet(m);
  std::vector<Mat> hulls, lins, forms;
  for (std::size_t b = 0; b < problem.blocks().size(); ++b) {
    const auto& piece = problem.blocks()[b];
    const int off = problem.offset(b), d = piece.dim();
    const Vec fb = s.fbar.segment(off, d), mb = zbar.mu.segment(off, d);
    const ConeDescriptor desc = cone_descriptors(piece, fb, mb);
    hulls.push_back(desc.affine_hull_basis);
    lins.push_back(desc.lineality_basis);
    forms.push_back(gamma_quadratic_form(piece, fb, mb));
    s.critical.append(desc.critical_set, off);
    s.subdiff.append(subdifferential_set(piece, fb), off);
    s.domain_normal.append(domain_normal_cone(piece, fb), off);
  }
  s.hull = block_diagonal(hulls);
  s.lineality = block_diagonal(lins);
  s.gamma_form = block_diagonal(forms);
  return s;
}

Mat critical_basis(const OuterSide& s) {
  const auto m = s.jac.rows();
  const Mat off_hull = (Mat::Identity(m, m) - s.hull * s.hull.transpose()) * s.jac;
  return null_space(off_hull);
}

struct PolarSearch {
  Verdict verdict = Verdict::kHolds;
  std::string method;
  std::optional<Vec> witness;
};

// Nonzero w in cone with J^T w = 0, exact for sign-constrained coordinates: the extreme rays
// of {s >= 0 : M s = 0} have supports on which M has a one-dimensional kernel.
std::optional<PolarSearch> polyhedral_search(const Mat& jt, const StructuredSet& cone) {
  const auto signs = cone.coordinate_signs();
  std::vector<int> free_idx, signed_idx;
  for (int i = 0; i < static_cast<int>(signs.size()); ++i) {
    if (signs[i] == 2) free_idx.push_back(i);
    if (signs[i] == 1 || signs[i] == -1) signed_idx.push_back(i);
  }
  const auto n = jt.rows();
  const auto m = jt.cols();
  Mat a_free(n, static_cast<Eigen::Index>(free_idx.size()));
  for (std::size_t k = 0; k < free_idx.size(); ++k) a_free.col(k) = jt.col(free_idx[k]);
  PolarSearch out{Verdict::kFails, "exact", std::nullopt};
  if (!free_idx.empty()) {
    const Mat nf = null_space(a_free);
    if (nf.cols() > 0) {
      Vec w = Vec::Zero(m);
      for (std::size_t k = 0; k < free_idx.size(); ++k) w[free_idx[k]] = nf(k, 0);
      out.witness = w;
      return out;
    }
  }
  if (signed_idx.empty()) return PolarSearch{Verdict::kHolds, "exact", std::nullopt};
  if (static_cast<int>(signed_idx.size()) > kMaxEnumerated) return std::nullopt;

  const Mat range_free = orthonormal_range(a_free);
  const Mat proj_out = Mat::Identity(n, n) - range_free * range_free.transpose();
  Mat a_signed(n, static_cast<Eigen::Index>(signed_idx.size()));
  for (std::size_t k = 0; k < signed_idx.size(); ++k) {
    a_signed.col(k) = signs[signed_idx[k]] * jt.col(signed_idx[k]);
  }
  const Mat reduced = proj_out * a_signed;
  const int k = static_cast<int>(signed_idx.size());
  const int max_support = std::min(k, numerical_rank(reduced, 1e-10) + 1);
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    const int support = __builtin_popcount(mask);
    if (support > max_support) continue;
    std::vector<int> cols;
    for (int i = 0; i < k; ++i) {
      if (mask & (1u << i)) cols.push_back(i);
    }
    Mat sub(n, support);
    for (int c = 0; c < support; ++c) sub.col(c) = reduced.col(cols[c]);
    const Mat kern = null_space(sub);
    if (kern.cols() != 1) continue;
    Vec ray = kern.col(0);
    if (ray.sum() < 0) ray = -ray;
    if (ray.minCoeff() <= 1e-9 * ray.norm()) continue;
    Vec s_full = Vec::Zero(k);
    for (int c = 0; c < support; ++c) s_full[cols[c]] = ray[c];
    Vec w = Vec::Zero(m);
    for (int i = 0; i < k; ++i) w[signed_idx[i]] = signs[signed_idx[i]] * s_full[i];
    if (!free_idx.empty()) {
      const Vec wf =
          a_free.completeOrthogonalDecomposition().solve(-(a_signed * s_full));
      for (std::size_t j = 0; j < free_idx.size(); ++j) w[free_idx[j]] = wf[j];
    }
    out.witness = w;
    return out;
  }
  return PolarSearch{Verdict::kHolds, "exact", std::nullopt};
}

PolarSearch search_polar(const Mat& jac, const StructuredSet& cone, double tol, int budget,
                         std::uint64_t seed) {
  const Mat jt = jac.transpose();
  if (cone.is_polyhedral()) {
    if (auto exact = polyhedral_search(jt, cone)) return *exact;
  }
  const Mat kernel = null_space(jt);
  if (kernel.cols() == 0) return {Verdict::kHolds, "exact", std::nullopt};
  const Mat lin = cone.lineality_basis();
  if (lin.cols() > 0) {
    const Mat k = null_space(jt * lin);
    if (k.cols() > 0) return {Verdict::kFails, "rank-test", Vec(lin * k.col(0))};
  }
  Rng rng(seed);
  for (int r = 0; r < budget; ++r) {
    Vec w = kernel * rng.unit_sphere(static_cast<int>(kernel.cols()));
    bool collapsed = false;
    for (int it = 0; it < kApIterations; ++it) {
      w = kernel * (kernel.transpose() * cone.project(w));
      const double nrm = w.norm();
      if (nrm < 1e-14) {
        collapsed = true;
        break;
      }
      w /= nrm;
    }
    if (collapsed) continue;
    if ((w - cone.project(w)).norm() <= tol) {
      return {Verdict::kFails, "alternating-projections", w};
    }
  }
  return {Verdict::kHeuristicLikely, "alternating-projections", std::nullopt};
}

CheckResult to_check(const PolarSearch& s, double tol) { return {s.verdict, tol, s.method}; }

bool second_multiplier(const OuterSide& s, const KKTPoint& zbar, const Vec& direction,
                       double tol) {
  const Mat kernel = null_space(s.jac.transpose());
  const Vec dir = direction / direction.norm();
  for (double t : {1.0, 0.3, 0.1, 0.03, 0.01, 1e-3}) {
    Vec mu = zbar.mu + t * dir;
    for (int it = 0; it < 2000; ++it) {
      mu = s.subdiff.project(kernel * (kernel.transpose() * mu));
    }
    const double stat = (s.jac.transpose() * mu).norm();
    const double member = (mu - s.subdiff.project(mu)).norm();
    const double scale = 1.0 + mu.norm();
    if (stat <= tol * scale && member <= tol * scale && (mu - zbar.mu).norm() > 1e-6) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kHolds: return "holds";
    case Verdict::kFails: return "fails";
    case Verdict::kHeuristicLikely: return "heuristic-likely";
    case Verdict::kUnsupported: return "unsupported";
  }
  return "unsupported";
}

Verdict verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::kHolds, Verdict::kFails, Verdict::kHeuristicLikely,
                    Verdict::kUnsupported}) {
    if (to_string(v) == s) return v;
  }
  throw ParseError("unknown verdict '" + s + "'");
}

std::string to_string(Evidence e) {
  return e == Evidence::kFor ? "evidence-for" : "counterexample-found";
}

CriticalSubspace critical_subspace(const CompositeProblem& problem, const KKTPoint& zbar) {
  return {critical_basis(outer_side(problem, zbar))};
}

CheckResult nondegeneracy_check(const CompositeProblem& problem, const KKTPoint& zbar,
                                double tol) {
  const OuterSide s = outer_side(problem, zbar);
  Mat stacked(problem.m(), s.jac.cols() + s.lineality.cols());
  stacked << s.jac, s.lineality;
  const bool full = numerical_rank(stacked, tol) == problem.m();
  return {full ? Verdict::kHolds : Verdict::kFails, tol, "rank-test"};
}

CheckResult srcq_check(const CompositeProblem& problem, const KKTPoint& zbar, double tol,
                       int budget, std::uint64_t seed) {
  const OuterSide s = outer_side(problem, zbar);
  return to_check(search_polar(s.jac, s.critical.polar(), tol, budget, seed), tol);
}

CheckResult rcq_check(const CompositeProblem& problem, const KKTPoint& zbar, double tol,
                      int budget, std::uint64_t seed) {
  const OuterSide s = outer_side(problem, zbar);
  return to_check(search_polar(s.jac, s.domain_normal, tol, budget, seed), tol);
}

bool multiplier_unique(const CompositeProblem& problem, const KKTPoint& zbar, double tol,
                       std::uint64_t seed) {
  const OuterSide s = outer_side(problem, zbar);
  const PolarSearch search = search_polar(s.jac, s.critical.polar(), tol, 200, seed);
  if (!search.witness) return true;
  return !second_multiplier(s, zbar, *search.witness, tol);
}

SsoscResult ssosc_on_basis(const CompositeProblem& problem, const KKTPoint& zbar, const Mat& basis,
                           double tol) {
  const OuterSide s = outer_side(problem, zbar);
  SsoscResult r;
  r.tol = tol;
  r.subspace_dim = static_cast<int>(basis.cols());
  if (basis.cols() == 0) {
    r.verdict = Verdict::kHolds;
    return r;
  }
  const Mat h = problem.F().weighted_hessian(zbar.x, zbar.mu);
  Mat reduced = basis.transpose() * (h + s.jac.transpose() * s.gamma_form * s.jac) * basis;
  reduced = 0.5 * (reduced + reduced.transpose());
  r.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Mat>(reduced).eigenvalues().minCoeff();
  r.verdict = r.min_eigenvalue > tol ? Verdict::kHolds : Verdict::kFails;
  return r;
}

SsoscResult ssosc_check(const CompositeProblem& problem, const KKTPoint& zbar, double tol) {
  if (!multiplier_unique(problem, zbar, tol)) {
    throw UnsupportedCase("ssosc_check: the multiplier set is not a singleton");
  }
  return ssosc_on_basis(problem, zbar, critical_subspace(problem, zbar).basis, tol);
}

SweepStats nonsingularity_sweep(const CompositeProblem& problem, const KKTPoint& zbar, int count,
                                std::uint64_t seed, double tol) {
  outer_side(problem, zbar);
  const auto elements = sample_elements_R(problem, zbar, count, seed);
  SweepStats st;
  st.tol = tol;
  st.elements = static_cast<int>(elements.size());
  st.min_singular_value = kInf;
  for (const auto& e : elements) {
    st.min_singular_value = std::min(st.min_singular_value, min_singular_value(e.matrix));
  }
  st.singular_found = st.min_singular_value <= tol;
  return st;
}

ProbeStats strong_regularity_probe(const CompositeProblem& problem, const KKTPoint& zbar,
                                   double radius, int num_delta, std::uint64_t seed,
                                   const NewtonOptions& newton, double threshold) {
  if (!(radius > 0) || num_delta < 1) {
    throw PreconditionError("probe: radius must be positive and num_delta >= 1");
  }
  outer_side(problem, zbar);
  const int dim = problem.n() + problem.m();
  const Vec zb = zbar.stacked();
  ProbeStats st;
  st.radius = radius;
  st.num_delta = num_delta;
  st.starts = 3;
  st.threshold = threshold;

  std::vector<std::pair<Vec, Vec>> solved{{Vec::Zero(dim), zb}};
  for (int k = 0; k < num_delta; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const Vec delta = radius * rng.unit_ball(dim);
    std::vector<Vec> starts{zb, zb + radius * rng.unit_ball(dim), zb + radius * rng.unit_ball(dim)};
    std::vector<Vec> sols;
    try {
      for (const auto& s : starts) {
        sols.push_back(
            solve_linearized_ge(problem, zbar, delta, KKTPoint::unstack(s, problem.n()), newton)
                .stacked());
      }
    } catch (const ConvergenceError&) {
      ++st.failures;
      continue;
    }
    double spread = 0.0;
    for (std::size_t i = 0; i < sols.size(); ++i) {
      for (std::size_t j = i + 1; j < sols.size(); ++j) {
        spread = std::max(spread, (sols[i] - sols[j]).norm());
      }
    }
    if (spread > threshold) {
      ++st.violations;
      continue;
    }
    solved.emplace_back(delta, sols.front());
  }
  if (solved.size() >= 2) {
    double modulus = 0.0;
    for (std::size_t i = 0; i < solved.size(); ++i) {
      for (std::size_t j = i + 1; j < solved.size(); ++j) {
        const double dd = (solved[i].first - solved[j].first).norm();
        if (dd > 0) modulus = std::max(modulus, (solved[i].second - solved[j].second).norm() / dd);
      }
    }
    st.modulus = modulus;
  }
  return st;
}

StabilityReport equivalence_report(const CompositeProblem& problem, const KKTPoint& zbar,
                                   const StabilityOptions& opts) {
  StabilityReport r;
  r.rcq = rcq_check(problem, zbar, opts.tol, opts.srcq_budget, derive_seed(opts.seed, 1));
  r.srcq = srcq_check(problem, zbar, opts.tol, opts.srcq_budget, derive_seed(opts.seed, 2));
  r.nondegeneracy = nondegeneracy_check(problem, zbar, opts.tol);
  r.multiplier_unique = multiplier_unique(problem, zbar, opts.tol, derive_seed(opts.seed, 3));
  const CriticalSubspace crit = critical_subspace(problem, zbar);
  r.critical_dim = crit.dim();
  if (r.multiplier_unique) {
    r.ssosc = ssosc_on_basis(problem, zbar, crit.basis, opts.tol);
  } else if (r.nondegeneracy.verdict == Verdict::kHolds) {
    r.ssosc = ssosc_check(problem, zbar, opts.tol);
  } else {
    // Leg (a) is already decided by the nondegeneracy failure.
    r.ssosc.verdict = Verdict::kUnsupported;
    r.ssosc.tol = opts.tol;
    r.ssosc.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    r.ssosc.subspace_dim = crit.dim();
  }
  r.sweep = nonsingularity_sweep(problem, zbar, opts.samples, derive_seed(opts.seed, 4), opts.tol);
  r.probe = strong_regularity_probe(problem, zbar, opts.probe_radius, opts.num_delta,
                                    derive_seed(opts.seed, 5), opts.newton,
                                    opts.uniqueness_threshold);
  r.leg_second_order =
      r.nondegeneracy.verdict == Verdict::kHolds && r.ssosc.verdict == Verdict::kHolds;
  r.leg_sweep = !r.sweep.singular_found;
  r.leg_probe = r.probe.positive();
  if (r.leg_second_order != r.leg_sweep) {
    r.disagreement = "second-order vs sweep";
  } else if (r.leg_sweep != r.leg_probe) {
    r.disagreement = "sweep vs probe";
  }
  r.consistent = r.disagreement.empty();
  return r;
}

AssumptionReport assumption_check(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar,
                                  int samples, double tol, std::uint64_t seed) {
  require_subgradient(piece, xbar, ubar);
  const int d = piece.dim();
  const auto elems = sample_clarke(piece, xbar + ubar, samples, seed);
  const ConeDescriptor desc = cone_descriptors(piece, xbar, ubar);
  AssumptionReport r;
  r.tol = tol;
  r.elements = static_cast<int>(elems.size());

  Mat ranges(d, 0), nulls(d, 0);
  const Mat lin_perp = orthogonal_complement(desc.lineality_basis, d);
  double null_inside = 0.0;
  for (const auto& u : elems) {
    const Mat rg = orthonormal_range(u.matrix);
    const Mat nl = null_space(u.matrix);
    Mat grown(d, ranges.cols() + rg.cols());
    grown << ranges, rg;
    ranges = std::move(grown);
    Mat grown_n(d, nulls.cols() + nl.cols());
    grown_n << nulls, nl;
    nulls = std::move(grown_n);
    null_inside = std::max(null_inside, projection_residual(nl, lin_perp));
  }
  const Mat range_span = orthonormal_range(ranges);
  r.range_residual = subspace_mismatch(range_span, desc.affine_hull_basis);
  r.range_span = r.range_residual <= tol ? Evidence::kFor : Evidence::kCounterexample;
  r.null_residual = std::max(null_inside, projection_residual(lin_perp, orthonormal_range(nulls)));
  r.null_span = r.null_residual <= tol ? Evidence::kFor : Evidence::kCounterexample;

  Rng rng(derive_seed(seed, 7));
  double gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto& u = elems[static_cast<std::size_t>(rng.below(static_cast<int>(elems.size())))];
    const Vec v = u.matrix * rng.normal_vector(d);
    const ExtendedValue closed = gamma(piece, xbar, ubar, v);
    if (!closed.finite()) {
      gap = kInf;
      break;
    }
    const double scale = 1.0 + std::abs(closed.value) + v.squaredNorm();
    double best = kInf;
    for (const auto& e : elems) {
      const ExtendedValue val = gamma_oracle(piece, xbar, ubar, v, {e});
      if (!val.finite()) continue;
      gap = std::max(gap, std::max(0.0, closed.value - val.value) / scale);
      if (e.b_element) best = std::min(best, val.value);
    }
    gap = std::max(gap, std::abs(best - closed.value) / scale);
  }
  r.gamma_gap = gap;
  r.gamma_attained = gap <= tol ? Evidence::kFor : Evidence::kCounterexample;
  return r;
}

DomainComparison compare_critical_domain(const CompositeProblem& problem, const KKTPoint& zbar,
                                         int samples, std::uint64_t seed) {
  const OuterSide s = outer_side(problem, zbar);
  const Mat crit = critical_basis(s);
  std::vector<Mat> ranges;
  for (std::size_t b = 0; b < problem.blocks().size(); ++b) {
    const auto& piece = problem.blocks()[b];
    const int off = problem.offset(b), d = piece.dim();
    const Vec w = s.fbar.segment(off, d) + zbar.mu.segment(off, d);
    Mat all(d, 0);
    for (const auto& u : sample_clarke(piece, w, samples, derive_seed(seed, b))) {
      Mat grown(d, all.cols() + d);
      grown << all, u.matrix;
      all = std::move(grown);
    }
    ranges.push_back(orthonormal_range(all));
  }
  const Mat range = block_diagonal(ranges);
  const auto m = problem.m();
  const Mat domain = null_space((Mat::Identity(m, m) - range * range.transpose()) * s.jac);
  DomainComparison c;
  c.critical_dim = static_cast<int>(crit.cols());
  c.domain_dim = static_cast<int>(domain.cols());
  c.residual = subspace_mismatch(crit, domain);
  for (Eigen::Index k = 0; k < crit.cols(); ++k) {
    const Vec v = s.jac * crit.col(k);
    for (std::size_t b = 0; b < problem.blocks().size(); ++b) {
      const auto& piece = problem.blocks()[b];
      const int off = problem.offset(b), d = piece.dim();
      if (!gamma(piece, s.fbar.segment(off, d), zbar.mu.segment(off, d), v.segment(off, d))
               .finite()) {
        ++c.gamma_domain_misses;
        break;
      }
    }
  }
  return c;
}

}  // namespace kktstab
