#pragma once

#include <doctest.h>

#include <initializer_list>

#include "kktstab/linalg.hpp"

namespace kktstab::test {

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Mat mat2(double a, double b, double c) {
  Mat m(2, 2);
  m << a, b, b, c;
  return m;
}

inline Mat diag(std::initializer_list<double> xs) { return vec(xs).asDiagonal(); }

inline double dist(const Vec& a, const Vec& b) { return (a - b).norm(); }
inline double dist(const Mat& a, const Mat& b) { return (a - b).norm(); }

}  // namespace kktstab::test
