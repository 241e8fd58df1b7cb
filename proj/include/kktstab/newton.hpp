#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kktstab/errors.hpp"
#include "kktstab/problem.hpp"

namespace kktstab {

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 100;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double min_step = 1e-12;
  double regularization_floor = 1e-12;

  void validate() const;
};

enum class NewtonStatus { kConverged, kMaxIterations, kStagnation };

struct NewtonTrace {
  std::vector<double> residual_norms;  // infinity norm at the start and after each accepted step
  std::vector<double> step_lengths;
  std::vector<double> min_singular_values;
  NewtonStatus status = NewtonStatus::kConverged;

  int iterations() const { return static_cast<int>(step_lengths.size()); }
  bool operator==(const NewtonTrace&) const = default;
};

std::string to_string(NewtonStatus s);

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, NewtonTrace trace, Vec last)
      : Error(what), trace_(std::move(trace)), last_(std::move(last)) {}
  const NewtonTrace& trace() const { return trace_; }
  const Vec& last_iterate() const { return last_; }

 private:
  NewtonTrace trace_;
  Vec last_;
};

struct NewtonResult {
  Vec z;
  NewtonTrace trace;
};

// Damped semismooth Newton on res(z) = 0; `jac` returns a generalized-Jacobian element of res.
using ResidualFn = std::function<Vec(const Vec&)>;
using JacobianFn = std::function<Mat(const Vec&)>;
NewtonResult newton_iterate(const ResidualFn& res, const JacobianFn& jac, Vec z0,
                            const NewtonOptions& opts);

struct KKTSolution {
  KKTPoint z;
  NewtonTrace trace;
};

KKTSolution solve(const CompositeProblem& problem, const KKTPoint& z0, const NewtonOptions& opts = {});

enum class RateClass { kQuadratic, kSuperlinear, kLinear, kNone };
std::string to_string(RateClass r);

inline constexpr double kRateNoiseFloor = 1e-14;
RateClass local_rate(const NewtonTrace& trace);

}  // namespace kktstab
