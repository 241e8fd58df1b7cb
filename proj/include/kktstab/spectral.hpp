#pragma once

#include <optional>

#include "kktstab/linalg.hpp"

namespace kktstab {

// Eigen-split of a symmetric matrix. Eigenvalues are sorted descending, so the
// positive, near-zero and negative groups are the contiguous ranges
// [0, num_pos), [num_pos, num_pos + num_zero), [num_pos + num_zero, order).
struct SpectralSplit {
  Mat P;
  Vec lambda;  // zero group clamped to exactly 0
  int num_pos = 0;
  int num_zero = 0;
  int num_neg = 0;
  double tol_eig = 0.0;
  Mat Sigma;

  int order() const { return static_cast<int>(lambda.size()); }
  int zero_begin() const { return num_pos; }
  int neg_begin() const { return num_pos + num_zero; }
  enum class Group { kPositive, kZero, kNegative };
  Group group(int i) const;
};

double default_eig_tol(const Mat& a);
SpectralSplit eig_split(const Mat& a, std::optional<double> tol_eig = std::nullopt);

}  // namespace kktstab
