#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kktstab/convex_piece.hpp"
#include "kktstab/structured_set.hpp"

namespace kktstab {

// Extended-real scalar; +inf marks points outside the domain.
struct ExtendedValue {
  double value = 0.0;
  bool boundary_warning = false;  // v was just outside the domain tolerance
  bool finite() const;
};

struct LinearOperatorElement {
  Mat matrix;
  std::string provenance;
  bool b_element = true;  // false for convex combinations
};

struct Envelope {
  double value = 0.0;
  Vec gradient;
};

struct ConeDescriptor {
  Mat affine_hull_basis;
  Mat lineality_basis;
  StructuredSet critical_set;
  bool membership(const Vec& d, double tol) const { return critical_set.contains(d, tol); }
};

double value(const ConvexPiece& piece, const Vec& z);
double conjugate_value(const ConvexPiece& piece, const Vec& w);

Vec prox(const ConvexPiece& piece, const Vec& z, double sigma = 1.0);
// Prox of sigma * conjugate, evaluated from the conjugate's own closed form.
Vec prox_conjugate(const ConvexPiece& piece, const Vec& z, double sigma = 1.0);
Envelope moreau_envelope(const ConvexPiece& piece, const Vec& z, double sigma = 1.0);

Vec prox_dirderiv(const ConvexPiece& piece, const Vec& z, const Vec& d, double sigma = 1.0);
Vec prox_conjugate_dirderiv(const ConvexPiece& piece, const Vec& z, const Vec& d);

LinearOperatorElement clarke_element(const ConvexPiece& piece, const Vec& z);
// Canonical element first, then the zero-pattern element, then B-elements and
// convex combinations; duplicates (distance <= 1e-12) removed.
std::vector<LinearOperatorElement> sample_clarke(const ConvexPiece& piece, const Vec& z, int count,
                                                 std::uint64_t seed);

void require_subgradient(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar);
ExtendedValue gamma(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar, const Vec& v);
ExtendedValue gamma_oracle(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar,
                           const Vec& v, const std::vector<LinearOperatorElement>& samples);
// Gamma restricted to its domain is v^T Q v; returns Q.
Mat gamma_quadratic_form(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar);

ConeDescriptor cone_descriptors(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar);
StructuredSet subdifferential_set(const ConvexPiece& piece, const Vec& xbar);
StructuredSet domain_normal_cone(const ConvexPiece& piece, const Vec& xbar);

// Range membership tolerance for the Gamma domain.
inline double range_tol(double vnorm) { return 1e-8 * (1.0 + vnorm); }

}  // namespace kktstab
