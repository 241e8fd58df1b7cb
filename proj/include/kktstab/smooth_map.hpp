#pragma once

#include <functional>
#include <vector>

#include "kktstab/linalg.hpp"

namespace kktstab {

// Smooth map F: R^n -> R^m with analytic value/Jacobian and an optional analytic
// weighted Hessian sum_i mu_i * Hess F_i(x). Without one, central differences of
// x -> J(x)^T mu are used.
class SmoothMap {
 public:
  using EvalFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;
  using HessianFn = std::function<Mat(const Vec&, const Vec&)>;

  SmoothMap(int n, int m, EvalFn eval, JacobianFn jacobian, HessianFn weighted_hessian = {});

  int n() const { return n_; }
  int m() const { return m_; }
  bool has_analytic_hessian() const { return static_cast<bool>(hessian_); }

  Vec eval(const Vec& x) const;
  Mat jacobian(const Vec& x) const;
  Mat weighted_hessian(const Vec& x, const Vec& mu) const;
  Mat weighted_hessian_fd(const Vec& x, const Vec& mu) const;

 private:
  int n_;
  int m_;
  EvalFn eval_;
  JacobianFn jacobian_;
  HessianFn hessian_;
};

// One output f(x) = constant + linear^T x + 0.5 x^T quadratic x (quadratic symmetric).
struct QuadraticForm {
  double constant = 0.0;
  Vec linear;
  Mat quadratic;
};

SmoothMap quadratic_map(int n, std::vector<QuadraticForm> outputs);

}  // namespace kktstab
