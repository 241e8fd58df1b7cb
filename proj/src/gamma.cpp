#include <algorithm>
#include <cmath>
#include <limits>

#include "kktstab/errors.hpp"
#include "kktstab/prox.hpp"
#include "piece_internal.hpp"

namespace kktstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoundaryFactor = 1e4;

bool near(double a, double b) { return std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(b)); }

ExtendedValue from_residual(double residual, double vnorm, double finite_value) {
  if (residual <= range_tol(vnorm)) return {finite_value, false};
  return {kInf, residual <= kBoundaryFactor * range_tol(vnorm)};
}

IntervalPart single(int i, double lo, double hi) {
  return IntervalPart{i, Vec::Constant(1, lo), Vec::Constant(1, hi)};
}

StructuredSet separable_critical_set(const ConvexPiece& piece, const Vec& z) {
  StructuredSet set(static_cast<int>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const auto rule = detail::prox_rule(piece, static_cast<int>(i), 1.0);
    const auto loc = detail::locate(rule, z[i]);
    const int left = rule.slopes[loc.index];
    const int right = loc.at_kink ? rule.slopes[loc.index + 1] : left;
    const int k = static_cast<int>(i);
    if (left == 1 && right == 1) {
      set.add(single(k, -kInf, kInf));
    } else if (left == 0 && right == 0) {
      set.add(single(k, 0.0, 0.0));
    } else if (right == 1) {
      set.add(single(k, 0.0, kInf));
    } else {
      set.add(single(k, -kInf, 0.0));
    }
  }
  return set;
}

StructuredSet psd_critical_set(const SpectralSplit& s) {
  const int m = s.order();
  SpectralPart part{0, m, s.P, Eigen::MatrixXi::Zero(m, m), s.zero_begin(), s.neg_begin(), 1};
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (s.group(i) == SpectralSplit::Group::kPositive ||
          s.group(j) == SpectralSplit::Group::kPositive) {
        part.mask(i, j) = 1;
      }
    }
  }
  StructuredSet set(svec_dim(m));
  set.add(std::move(part));
  return set;
}

StructuredSet critical_set(const ConvexPiece& piece, const Vec& z) {
  if (piece.as<PsdIndicator>()) return psd_critical_set(eig_split(smat(z)));
  if (piece.is_separable()) return separable_critical_set(piece, z);
  const auto& inner = detail::inner_of(piece);
  StructuredSet set(piece.dim());
  set.append(critical_set(inner, z.tail(inner.dim())), 1);
  return set;
}

// Normal cone of the PSD cone at xbar (which must be PSD up to tolerance).
StructuredSet psd_normal_cone(const Vec& xbar) {
  const SpectralSplit s = eig_split(smat(xbar));
  const int m = s.order();
  StructuredSet set(svec_dim(m));
  set.add(SpectralPart{0, m, s.P, Eigen::MatrixXi::Zero(m, m), s.num_pos, m, -1});
  return set;
}

// ∂r(xbar) for the separable pieces; l1 contributes its subdifferential when
// `as_normal_cone` is false and the (trivial) normal cone of its domain otherwise.
StructuredSet separable_subdiff(const ConvexPiece& piece, const Vec& x, bool as_normal_cone) {
  StructuredSet set(static_cast<int>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int k = static_cast<int>(i);
    if (auto o = piece.as<OrthantIndicator>()) {
      const bool active = near(x[i], 0.0);
      if (!active) {
        set.add(single(k, 0.0, 0.0));
      } else if (o->sign == OrthantSign::kNonNegative) {
        set.add(single(k, -kInf, 0.0));
      } else {
        set.add(single(k, 0.0, kInf));
      }
    } else if (auto b = piece.as<BoxIndicator>()) {
      const double lo = b->lower[i], hi = b->upper[i];
      const bool at_lo = std::isfinite(lo) && near(x[i], lo);
      const bool at_hi = std::isfinite(hi) && near(x[i], hi);
      if (at_lo && at_hi) {
        set.add(single(k, -kInf, kInf));
      } else if (at_lo) {
        set.add(single(k, -kInf, 0.0));
      } else if (at_hi) {
        set.add(single(k, 0.0, kInf));
      } else {
        set.add(single(k, 0.0, 0.0));
      }
    } else {
      if (as_normal_cone) {
        set.add(single(k, 0.0, 0.0));
      } else if (near(x[i], 0.0)) {
        set.add(single(k, -1.0, 1.0));
      } else {
        const double sgn = x[i] > 0 ? 1.0 : -1.0;
        set.add(single(k, sgn, sgn));
      }
    }
  }
  return set;
}

StructuredSet subdiff_impl(const ConvexPiece& piece, const Vec& x, bool as_normal_cone) {
  if (x.size() != piece.dim()) throw DimensionError("subdifferential: dimension mismatch");
  if (piece.as<PsdIndicator>()) return psd_normal_cone(x);
  if (piece.is_separable()) return separable_subdiff(piece, x, as_normal_cone);
  const auto& inner = detail::inner_of(piece);
  StructuredSet set(piece.dim());
  const double c = as_normal_cone ? 0.0 : 1.0;
  set.add(single(0, c, c));
  set.append(subdiff_impl(inner, x.tail(inner.dim()), as_normal_cone), 1);
  return set;
}

ExtendedValue gamma_psd(const Vec& z, const Vec& v) {
  const SpectralSplit s = eig_split(smat(z));
  const Mat vt = s.P.transpose() * smat(v) * s.P;
  const int m = s.order();
  double outside = 0.0;
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const auto gi = s.group(i), gj = s.group(j);
      using G = SpectralSplit::Group;
      const bool off_domain = (gi == G::kNegative && gj != G::kPositive) ||
                              (gj == G::kNegative && gi != G::kPositive);
      if (off_domain) outside += vt(i, j) * vt(i, j);
      if (gi == G::kPositive && gj == G::kNegative) {
        total += -2.0 * (s.lambda[j] / s.lambda[i]) * vt(i, j) * vt(i, j);
      }
    }
  }
  return from_residual(std::sqrt(outside), v.norm(), total);
}

}  // namespace

void require_subgradient(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar) {
  if (xbar.size() != piece.dim() || ubar.size() != piece.dim()) {
    throw DimensionError("subgradient check: " + piece.describe() + " expects dimension " +
                         std::to_string(piece.dim()));
  }
  const double gap = (prox(piece, xbar + ubar) - xbar).norm();
  const double tol = 1e-8 * (1.0 + xbar.norm() + ubar.norm());
  if (gap > tol) {
    throw PreconditionError("ubar is not a subgradient at xbar for " + piece.describe() +
                            " (prox fixed-point gap " + std::to_string(gap) + ")");
  }
}

ExtendedValue gamma(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar, const Vec& v) {
  require_subgradient(piece, xbar, ubar);
  if (v.size() != piece.dim()) throw DimensionError("gamma: direction has wrong dimension");
  const Vec z = xbar + ubar;
  if (piece.as<PsdIndicator>()) return gamma_psd(z, v);
  if (piece.is_separable()) {
    const Mat basis = critical_set(piece, z).span_basis();
    const Vec off = v - basis * (basis.transpose() * v);
    return from_residual(off.norm(), v.norm(), 0.0);
  }
  const auto& inner = detail::inner_of(piece);
  const auto n = inner.dim();
  return gamma(inner, xbar.tail(n), ubar.tail(n), v.tail(n));
}

ExtendedValue gamma_oracle(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar,
                           const Vec& v, const std::vector<LinearOperatorElement>& samples) {
  require_subgradient(piece, xbar, ubar);
  double best = kInf;
  double closest = kInf;
  for (const auto& u : samples) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (u.matrix + u.matrix.transpose()));
    const Vec coeff = es.eigenvectors().transpose() * v;
    double outside = 0.0;
    double quad = 0.0;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) {
      const double lam = es.eigenvalues()[k];
      if (lam > 1e-12) {
        quad += coeff[k] * coeff[k] / lam;
      } else {
        outside += coeff[k] * coeff[k];
      }
    }
    outside = std::sqrt(outside);
    closest = std::min(closest, outside);
    if (outside <= range_tol(v.norm())) best = std::min(best, quad - v.squaredNorm());
  }
  if (std::isfinite(best)) return {best, false};
  return {kInf, closest <= kBoundaryFactor * range_tol(v.norm())};
}

Mat gamma_quadratic_form(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar) {
  require_subgradient(piece, xbar, ubar);
  if (piece.as<PsdIndicator>()) {
    const SpectralSplit s = eig_split(smat(xbar + ubar));
    Mat q = Mat::Zero(piece.dim(), piece.dim());
    for (int i = 0; i < s.num_pos; ++i) {
      for (int j = s.neg_begin(); j < s.order(); ++j) {
        const Vec b = rotated_unit(s.P, i, j);
        q += (-s.lambda[j] / s.lambda[i]) * b * b.transpose();
      }
    }
    return q;
  }
  if (piece.is_separable()) return Mat::Zero(piece.dim(), piece.dim());
  const auto& inner = detail::inner_of(piece);
  const auto n = inner.dim();
  return block_diagonal({Mat::Zero(1, 1), gamma_quadratic_form(inner, xbar.tail(n), ubar.tail(n))});
}

ConeDescriptor cone_descriptors(const ConvexPiece& piece, const Vec& xbar, const Vec& ubar) {
  require_subgradient(piece, xbar, ubar);
  ConeDescriptor d;
  d.critical_set = critical_set(piece, xbar + ubar);
  d.affine_hull_basis = d.critical_set.span_basis();
  d.lineality_basis = d.critical_set.lineality_basis();
  return d;
}

StructuredSet subdifferential_set(const ConvexPiece& piece, const Vec& xbar) {
  return subdiff_impl(piece, xbar, false);
}

StructuredSet domain_normal_cone(const ConvexPiece& piece, const Vec& xbar) {
  return subdiff_impl(piece, xbar, true);
}

}  // namespace kktstab
