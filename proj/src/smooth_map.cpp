#include "kktstab/smooth_map.hpp"

#include <memory>
#include <string>

#include "kktstab/errors.hpp"

namespace kktstab {

SmoothMap::SmoothMap(int n, int m, EvalFn eval, JacobianFn jacobian, HessianFn weighted_hessian)
    : n_(n),
      m_(m),
      eval_(std::move(eval)),
      jacobian_(std::move(jacobian)),
      hessian_(std::move(weighted_hessian)) {
  if (n < 1 || m < 1) throw DimensionError("SmoothMap: dimensions must be positive");
  if (!eval_ || !jacobian_) throw PreconditionError("SmoothMap: eval and jacobian are required");
}

Vec SmoothMap::eval(const Vec& x) const {
  if (x.size() != n_) {
    throw DimensionError("SmoothMap::eval: expected n = " + std::to_string(n_) + ", got " +
                         std::to_string(x.size()));
  }
  return eval_(x);
}

Mat SmoothMap::jacobian(const Vec& x) const {
  if (x.size() != n_) {
    throw DimensionError("SmoothMap::jacobian: expected n = " + std::to_string(n_) + ", got " +
                         std::to_string(x.size()));
  }
  return jacobian_(x);
}

Mat SmoothMap::weighted_hessian(const Vec& x, const Vec& mu) const {
  if (mu.size() != m_) {
    throw DimensionError("SmoothMap::weighted_hessian: expected m = " + std::to_string(m_) +
                         ", got " + std::to_string(mu.size()));
  }
  if (!hessian_) return weighted_hessian_fd(x, mu);
  const Mat h = hessian_(x, mu);
  return 0.5 * (h + h.transpose());
}

Mat SmoothMap::weighted_hessian_fd(const Vec& x, const Vec& mu) const {
  const double h = 1e-5 * (1.0 + x.norm());
  Mat out(n_, n_);
  for (int j = 0; j < n_; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    out.col(j) = (jacobian(xp).transpose() * mu - jacobian(xm).transpose() * mu) / (2.0 * h);
  }
  return 0.5 * (out + out.transpose());
}

SmoothMap quadratic_map(int n, std::vector<QuadraticForm> outputs) {
  for (auto& q : outputs) {
    if (q.linear.size() == 0) q.linear = Vec::Zero(n);
    if (q.quadratic.size() == 0) q.quadratic = Mat::Zero(n, n);
    if (q.linear.size() != n || q.quadratic.rows() != n || q.quadratic.cols() != n) {
      throw DimensionError("quadratic_map: output coefficients do not match n = " +
                           std::to_string(n));
    }
    q.quadratic = 0.5 * (q.quadratic + q.quadratic.transpose());
  }
  const int m = static_cast<int>(outputs.size());
  auto shared = std::make_shared<const std::vector<QuadraticForm>>(std::move(outputs));
  auto eval = [shared, m](const Vec& x) {
    Vec f(m);
    for (int i = 0; i < m; ++i) {
      const auto& q = (*shared)[static_cast<std::size_t>(i)];
      f[i] = q.constant + q.linear.dot(x) + 0.5 * x.dot(q.quadratic * x);
    }
    return f;
  };
  auto jac = [shared, m, n](const Vec& x) {
    Mat j(m, n);
    for (int i = 0; i < m; ++i) {
      const auto& q = (*shared)[static_cast<std::size_t>(i)];
      j.row(i) = (q.linear + q.quadratic * x).transpose();
    }
    return j;
  };
  auto hess = [shared, m, n](const Vec&, const Vec& mu) {
    Mat h = Mat::Zero(n, n);
    for (int i = 0; i < m; ++i) h += mu[i] * (*shared)[static_cast<std::size_t>(i)].quadratic;
    return h;
  };
  return SmoothMap(n, m, eval, jac, hess);
}

}  // namespace kktstab
