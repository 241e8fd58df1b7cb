#pragma once

#include <vector>

#include "kktstab/convex_piece.hpp"
#include "kktstab/smooth_map.hpp"

namespace kktstab {

// min g(F(x)) with g block-separable over `blocks`.
class CompositeProblem {
 public:
  CompositeProblem(SmoothMap f, std::vector<ConvexPiece> blocks);

  const SmoothMap& F() const { return f_; }
  const std::vector<ConvexPiece>& blocks() const { return blocks_; }
  int n() const { return f_.n(); }
  int m() const { return f_.m(); }
  int offset(std::size_t block) const { return offsets_[block]; }

 private:
  SmoothMap f_;
  std::vector<ConvexPiece> blocks_;
  std::vector<int> offsets_;
};

struct KKTPoint {
  Vec x;
  Vec mu;

  Vec stacked() const;
  static KKTPoint unstack(const Vec& z, int n);
};

}  // namespace kktstab
