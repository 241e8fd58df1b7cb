#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kktstab/kkt.hpp"

namespace kktstab {

enum class Verdict { kHolds, kFails, kHeuristicLikely, kUnsupported };
std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct CheckResult {
  Verdict verdict = Verdict::kUnsupported;
  double tol = 0.0;
  std::string method;  // "exact", "rank-test", "alternating-projections", ...
  bool operator==(const CheckResult&) const = default;
};

struct SsoscResult {
  Verdict verdict = Verdict::kUnsupported;
  double tol = 0.0;
  // +inf when the critical subspace is trivial.
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  int subspace_dim = 0;  // NaN min_eigenvalue when the check was not run
  bool operator==(const SsoscResult& o) const {
    const bool same_eig = min_eigenvalue == o.min_eigenvalue ||
                          (std::isnan(min_eigenvalue) && std::isnan(o.min_eigenvalue));
    return verdict == o.verdict && tol == o.tol && subspace_dim == o.subspace_dim && same_eig;
  }
};

struct SweepStats {
  bool singular_found = false;
  double min_singular_value = 0.0;
  int elements = 0;
  double tol = 0.0;
  std::string status() const {
    return singular_found ? "singular-element-found" : "all-sampled-nonsingular";
  }
  bool operator==(const SweepStats&) const = default;
};

struct ProbeStats {
  double radius = 0.0;
  int num_delta = 0;
  int starts = 0;
  int violations = 0;  // perturbations with two starts ending > threshold apart
  int failures = 0;    // inner solver did not converge
  double threshold = 0.0;
  double modulus = std::numeric_limits<double>::infinity();
  bool positive() const { return violations == 0 && failures == 0 && modulus < 1e300; }
  bool operator==(const ProbeStats&) const = default;
};

struct CriticalSubspace {
  Mat basis;  // n x dim, orthonormal columns
  int dim() const { return static_cast<int>(basis.cols()); }
};

struct StabilityOptions {
  double tol = 1e-8;
  int samples = 32;
  std::uint64_t seed = 0;
  int srcq_budget = 1000;
  double probe_radius = 0.05;
  int num_delta = 50;
  double uniqueness_threshold = 1e-6;
  NewtonOptions newton;
};

struct StabilityReport {
  CheckResult rcq;
  CheckResult srcq;
  CheckResult nondegeneracy;
  bool multiplier_unique = false;
  int critical_dim = 0;
  SsoscResult ssosc;
  SweepStats sweep;
  ProbeStats probe;
  bool leg_second_order = false;  // SSOSC and nondegeneracy
  bool leg_sweep = false;         // every sampled element nonsingular
  bool leg_probe = false;         // Lipschitz single-valued perturbed solutions
  bool consistent = false;
  std::string disagreement;  // empty when consistent
  bool operator==(const StabilityReport&) const = default;
};

CriticalSubspace critical_subspace(const CompositeProblem& problem, const KKTPoint& zbar);
CheckResult nondegeneracy_check(const CompositeProblem& problem, const KKTPoint& zbar, double tol);
CheckResult srcq_check(const CompositeProblem& problem, const KKTPoint& zbar, double tol,
                       int budget, std::uint64_t seed = 0);
CheckResult rcq_check(const CompositeProblem& problem, const KKTPoint& zbar, double tol,
                      int budget, std::uint64_t seed = 0);
// Searches the multiplier set for a second point; false only when one is exhibited.
bool multiplier_unique(const CompositeProblem& problem, const KKTPoint& zbar, double tol,
                       std::uint64_t seed = 0);
// Throws UnsupportedCase when the multiplier is not unique.
SsoscResult ssosc_check(const CompositeProblem& problem, const KKTPoint& zbar, double tol);
// Same, for a caller-supplied orthonormal basis of the critical subspace.
SsoscResult ssosc_on_basis(const CompositeProblem& problem, const KKTPoint& zbar, const Mat& basis,
                           double tol);
SweepStats nonsingularity_sweep(const CompositeProblem& problem, const KKTPoint& zbar, int count,
                                std::uint64_t seed, double tol);
ProbeStats strong_regularity_probe(const CompositeProblem& problem, const KKTPoint& zbar,
                                   double radius, int num_delta, std::uint64_t seed,
                                   const NewtonOptions& newton = {}, double threshold = 1e-6);
StabilityReport equivalence_report(const CompositeProblem& problem, const KKTPoint& zbar,
                                   const StabilityOptions& opts = {});

// Per-piece evidence for the range/null-space and Gamma-attainment assumptions.
enum class Evidence { kFor, kCounterexample };
std::string to_string(Evidence e);

struct AssumptionReport {
  Evidence range_span = Evidence::kFor;
  Evidence null_span = Evidence::kFor;
  Evidence gamma_attained = Evidence::kFor;
  double range_residual = 0.0;
  double null_residual = 0.0;
  double gamma_gap = 0.0;
  int elements = 0;
  double tol = 0.0;
  bool all_for() const {
    return range_span == Evidence::kFor && null_span == Evidence::kFor &&
           gamma_attained == Evidence::kFor;
  }
};

AssumptionReport assumption_check(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar,
                                  int samples, double tol, std::uint64_t seed = 0);

// Compares the descriptor-based critical subspace with {d : F'(x)d in dom Gamma},
// the latter built from sampled generalized-Jacobian ranges.
struct DomainComparison {
  int critical_dim = 0;
  int domain_dim = 0;
  double residual = 0.0;  // mutual projection residual
  int gamma_domain_misses = 0;  // critical basis vectors d with Gamma(F'(x)d) = +inf
};
DomainComparison compare_critical_domain(const CompositeProblem& problem, const KKTPoint& zbar,
                                         int samples, std::uint64_t seed);

}  // namespace kktstab
