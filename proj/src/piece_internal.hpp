#pragma once

// Shared helpers for the per-piece calculus; not part of the public interface.

#include <array>
#include <functional>

#include "kktstab/convex_piece.hpp"
#include "kktstab/spectral.hpp"

namespace kktstab::detail {

// Piecewise-linear scalar map with slopes in {0, 1} between sorted kinks.
struct ScalarRule {
  std::array<double, 2> kinks{};
  int num_kinks = 0;
  std::array<int, 3> slopes{};
};

struct Location {
  bool at_kink = false;
  int index = 0;  // kink index if at_kink, else interval index
};

ScalarRule prox_rule(const ConvexPiece& piece, int i, double sigma);
ScalarRule conjugate_prox_rule(const ConvexPiece& piece, int i);
Location locate(const ScalarRule& rule, double z);
double rule_dirderiv(const ScalarRule& rule, double z, double d);

// Projection onto the PSD cone of a symmetric matrix.
Mat project_psd(const Mat& a);

// P * M * P^T where M = Sigma o (P^T D P) off the zero-zero block and beta_map(P^T D P
// restricted to the zero-zero block) on it.
Mat psd_derivative_apply(const SpectralSplit& s, const Mat& d,
                         const std::function<Mat(const Mat&)>& beta_map);

// Matrix in svec coordinates of D -> psd_derivative_apply(s, D, Z) for a linear Z given
// in svec coordinates of the zero block.
Mat psd_element_matrix(const SpectralSplit& s, const Mat& z_map);

const ConvexPiece& inner_of(const ConvexPiece& piece);

}  // namespace kktstab::detail
