#pragma once

#include <variant>
#include <vector>

#include "kktstab/linalg.hpp"

namespace kktstab {

// Coordinates [offset, offset + lower.size()) constrained to lower <= v <= upper.
struct IntervalPart {
  int offset = 0;
  Vec lower;
  Vec upper;
};

// A symmetric-matrix block in svec coordinates, described in the rotated basis P:
// entry (i, j) of P^T W P is either pinned to zero (mask 0) or free (mask 1), except
// the principal block [semi_begin, semi_end) which is semidefinite of sign semi_sign.
struct SpectralPart {
  int offset = 0;
  int order = 0;
  Mat P;
  Eigen::MatrixXi mask;
  int semi_begin = 0;
  int semi_end = 0;
  int semi_sign = 1;

  bool in_semi(int i, int j) const {
    return i >= semi_begin && i < semi_end && j >= semi_begin && j < semi_end;
  }
};

// Product of intervals and rotated spectral blocks; coordinates not covered by any
// part are free. Used for critical cones, their polars, normal cones and
// subdifferential sets of the supported pieces.
class StructuredSet {
 public:
  StructuredSet() = default;
  explicit StructuredSet(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  void add(IntervalPart part);
  void add(SpectralPart part);
  void append(const StructuredSet& other, int offset);

  Vec project(const Vec& v) const;
  bool contains(const Vec& v, double tol) const;
  bool is_polyhedral() const;
  bool is_cone() const;

  // Cone-only operations.
  StructuredSet polar() const;
  Mat span_basis() const;
  Mat lineality_basis() const;

  // For polyhedral cones: per-coordinate sign, -1 (<= 0), 0 (pinned), +1 (>= 0), 2 (free).
  std::vector<int> coordinate_signs() const;

 private:
  int dim_ = 0;
  std::vector<std::variant<IntervalPart, SpectralPart>> parts_;
};

}  // namespace kktstab
