#include "kktstab/newton.hpp"

#include <algorithm>
#include <cmath>

#include "kktstab/kkt.hpp"

namespace kktstab {

void NewtonOptions::validate() const {
  if (!(tol > 0 && max_iter > 0 && armijo_c > 0 && min_step > 0 && regularization_floor > 0)) {
    throw PreconditionError("NewtonOptions: all parameters must be positive");
  }
  if (!(backtrack_factor > 0 && backtrack_factor < 1)) {
    throw PreconditionError("NewtonOptions: backtrack_factor must lie in (0, 1)");
  }
}

std::string to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::kConverged: return "converged";
    case NewtonStatus::kMaxIterations: return "max-iterations";
    case NewtonStatus::kStagnation: return "stagnation";
  }
  return "unknown";
}

std::string to_string(RateClass r) {
  switch (r) {
    case RateClass::kQuadratic: return "quadratic";
    case RateClass::kSuperlinear: return "superlinear";
    case RateClass::kLinear: return "linear";
    case RateClass::kNone: return "none";
  }
  return "unknown";
}

NewtonResult newton_iterate(const ResidualFn& res, const JacobianFn& jac, Vec z,
                            const NewtonOptions& opts) {
  opts.validate();
  if (!z.allFinite()) throw PreconditionError("newton: starting point is not finite");
  NewtonTrace trace;
  Vec r = res(z);
  trace.residual_norms.push_back(r.lpNorm<Eigen::Infinity>());
  for (int k = 0;; ++k) {
    if (trace.residual_norms.back() <= opts.tol) {
      trace.status = NewtonStatus::kConverged;
      return {std::move(z), std::move(trace)};
    }
    if (k >= opts.max_iter) {
      trace.status = NewtonStatus::kMaxIterations;
      throw ConvergenceError("newton: iteration limit reached with residual " +
                                 std::to_string(trace.residual_norms.back()),
                             trace, z);
    }
    const Mat e = jac(z);
    Eigen::JacobiSVD<Mat> svd(e, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smin = sv.minCoeff();
    Vec step;
    if (smin >= 1e-10) {
      step = svd.solve(-r);
    } else {
      const double tau = opts.regularization_floor * std::max(1.0, sv[0] * sv[0]);
      const Mat normal = e.transpose() * e + tau * Mat::Identity(e.cols(), e.cols());
      step = normal.ldlt().solve(-e.transpose() * r);
    }
    const double merit = 0.5 * r.squaredNorm();
    const double slope = r.dot(e * step);
    double alpha = 1.0;
    Vec z_next, r_next;
    bool accepted = false;
    if (slope < 0 && step.allFinite()) {
      while (alpha >= opts.min_step) {
        z_next = z + alpha * step;
        r_next = res(z_next);
        if (r_next.allFinite() &&
            0.5 * r_next.squaredNorm() <= merit + opts.armijo_c * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= opts.backtrack_factor;
      }
    }
    if (!accepted) {
      trace.status = NewtonStatus::kStagnation;
      throw ConvergenceError("newton: line search collapsed below min_step at residual " +
                                 std::to_string(trace.residual_norms.back()),
                             trace, z);
    }
    z = std::move(z_next);
    r = std::move(r_next);
    trace.residual_norms.push_back(r.lpNorm<Eigen::Infinity>());
    trace.step_lengths.push_back(alpha);
    trace.min_singular_values.push_back(smin);
  }
}

KKTSolution solve(const CompositeProblem& problem, const KKTPoint& z0, const NewtonOptions& opts) {
  const int n = problem.n();
  auto res = [&](const Vec& v) { return residual(problem, KKTPoint::unstack(v, n)); };
  auto jac = [&](const Vec& v) {
    const KKTPoint p = KKTPoint::unstack(v, n);
    const Vec w = problem.F().eval(p.x) + p.mu;
    return residual_jacobian(assemble_element(problem, p, canonical_elements(problem, w)), n);
  };
  auto result = newton_iterate(res, jac, z0.stacked(), opts);
  return {KKTPoint::unstack(result.z, n), std::move(result.trace)};
}

RateClass local_rate(const NewtonTrace& trace) {
  struct Pair {
    double prev, next;
    bool censored;  // next fell to the noise floor: its order is only a lower bound
  };
  std::vector<Pair> pairs;
  const auto& e = trace.residual_norms;
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    // Logs are comparable only below 1.
    if (e[k] > kRateNoiseFloor && e[k] < 1.0) {
      const bool censored = e[k + 1] <= kRateNoiseFloor;
      pairs.push_back({e[k], std::max(e[k + 1], kRateNoiseFloor), censored});
    }
  }
  const std::size_t take = std::min<std::size_t>(3, pairs.size());
  const std::vector<Pair> tail(pairs.end() - static_cast<std::ptrdiff_t>(take), pairs.end());
  const auto exact = std::count_if(tail.begin(), tail.end(), [](const Pair& p) { return !p.censored; });
  if (pairs.size() < 2 || exact < 1) {
    throw InsufficientData("local_rate: need at least 2 comparable residual pairs, one above the "
                           "noise floor; trace has " + std::to_string(pairs.size()) + " pairs");
  }
  // A censored pair cannot refute a rate, so it only enters the ratio tests.
  double min_order = INFINITY, max_ratio = 0.0;
  bool ratios_shrink = true;
  double last_ratio = INFINITY;
  for (const auto& p : tail) {
    if (!p.censored) min_order = std::min(min_order, std::log(p.next) / std::log(p.prev));
    const double ratio = p.next / p.prev;
    max_ratio = std::max(max_ratio, ratio);
    // Constant ratios jittered by rounding must not read as superlinear.
    ratios_shrink = ratios_shrink && ratio < 0.9 * last_ratio;
    last_ratio = ratio;
  }
  if (min_order >= 1.8) return RateClass::kQuadratic;
  if (max_ratio < 1.0 && ratios_shrink && min_order > 1.05) return RateClass::kSuperlinear;
  if (max_ratio < 1.0) return RateClass::kLinear;
  return RateClass::kNone;
}

}  // namespace kktstab
