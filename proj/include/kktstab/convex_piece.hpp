#pragma once

#include <memory>
#include <string>
#include <variant>

#include "kktstab/linalg.hpp"

namespace kktstab {

class ConvexPiece;

enum class OrthantSign { kNonNegative, kNonPositive };

struct PsdIndicator {
  int order = 0;
};
struct OrthantIndicator {
  int dim = 0;
  OrthantSign sign = OrthantSign::kNonNegative;
};
struct BoxIndicator {
  Vec lower;
  Vec upper;
};
struct L1Norm {
  int dim = 0;
};
// g(c, y) = c + inner(y); coordinate 0 is the scalar c.
struct EpiLift {
  std::shared_ptr<const ConvexPiece> inner;
};

// One block of a block-separable convex function. Immutable once built.
class ConvexPiece {
 public:
  using Kind = std::variant<PsdIndicator, OrthantIndicator, BoxIndicator, L1Norm, EpiLift>;

  static ConvexPiece psd(int order);
  static ConvexPiece orthant(int dim, OrthantSign sign);
  static ConvexPiece box(Vec lower, Vec upper);
  static ConvexPiece l1(int dim);
  static ConvexPiece epi_lift(ConvexPiece inner);

  const Kind& kind() const { return kind_; }
  int dim() const { return dim_; }
  bool is_polyhedral() const;
  bool is_separable() const;  // orthant, box, l1
  std::string describe() const;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&kind_);
  }

 private:
  ConvexPiece(Kind kind, int dim) : kind_(std::move(kind)), dim_(dim) {}
  Kind kind_;
  int dim_;
};

}  // namespace kktstab
