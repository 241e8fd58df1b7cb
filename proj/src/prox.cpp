#include <algorithm>
#include <cmath>
#include <limits>

#include "kktstab/errors.hpp"
#include "kktstab/prox.hpp"
#include "piece_internal.hpp"

namespace kktstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kKinkRelTol = 1e-8;

double member_tol(const Vec& z) { return 1e-10 * (1.0 + z.norm()); }

void check_dim(const ConvexPiece& piece, const Vec& z, const char* what) {
  if (z.size() != piece.dim()) {
    throw DimensionError(std::string(what) + ": " + piece.describe() + " expects dimension " +
                         std::to_string(piece.dim()) + ", got " + std::to_string(z.size()));
  }
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

}  // namespace

namespace detail {

const ConvexPiece& inner_of(const ConvexPiece& piece) { return *piece.as<EpiLift>()->inner; }

ScalarRule prox_rule(const ConvexPiece& piece, int i, double sigma) {
  ScalarRule r;
  if (auto o = piece.as<OrthantIndicator>()) {
    r.num_kinks = 1;
    r.kinks[0] = 0.0;
    r.slopes = o->sign == OrthantSign::kNonNegative ? std::array<int, 3>{0, 1, 0}
                                                    : std::array<int, 3>{1, 0, 0};
  } else if (auto b = piece.as<BoxIndicator>()) {
    const double lo = b->lower[i], hi = b->upper[i];
    if (lo == hi) {
      r.slopes = {0, 0, 0};
    } else if (std::isinf(lo) && std::isinf(hi)) {
      r.slopes = {1, 0, 0};
    } else if (std::isinf(lo)) {
      r.num_kinks = 1;
      r.kinks[0] = hi;
      r.slopes = {1, 0, 0};
    } else if (std::isinf(hi)) {
      r.num_kinks = 1;
      r.kinks[0] = lo;
      r.slopes = {0, 1, 0};
    } else {
      r.num_kinks = 2;
      r.kinks = {lo, hi};
      r.slopes = {0, 1, 0};
    }
  } else if (piece.as<L1Norm>()) {
    r.num_kinks = 2;
    r.kinks = {-sigma, sigma};
    r.slopes = {1, 0, 1};
  } else {
    throw PreconditionError("prox_rule: piece is not separable");
  }
  return r;
}

ScalarRule conjugate_prox_rule(const ConvexPiece& piece, int i) {
  ScalarRule r;
  if (auto o = piece.as<OrthantIndicator>()) {
    // Conjugate is the indicator of the opposite orthant.
    r.num_kinks = 1;
    r.kinks[0] = 0.0;
    r.slopes = o->sign == OrthantSign::kNonNegative ? std::array<int, 3>{1, 0, 0}
                                                    : std::array<int, 3>{0, 1, 0};
  } else if (auto b = piece.as<BoxIndicator>()) {
    // Conjugate is the support function; its prox shrinks z by lo or hi.
    const double lo = b->lower[i], hi = b->upper[i];
    if (lo == hi || (std::isinf(lo) && std::isinf(hi))) {
      r.slopes = lo == hi ? std::array<int, 3>{1, 0, 0} : std::array<int, 3>{0, 0, 0};
    } else if (std::isinf(lo)) {
      r.num_kinks = 1;
      r.kinks[0] = hi;
      r.slopes = {0, 1, 0};
    } else if (std::isinf(hi)) {
      r.num_kinks = 1;
      r.kinks[0] = lo;
      r.slopes = {1, 0, 0};
    } else {
      r.num_kinks = 2;
      r.kinks = {lo, hi};
      r.slopes = {1, 0, 1};
    }
  } else if (piece.as<L1Norm>()) {
    r.num_kinks = 2;
    r.kinks = {-1.0, 1.0};
    r.slopes = {0, 1, 0};
  } else {
    throw PreconditionError("conjugate_prox_rule: piece is not separable");
  }
  return r;
}

Location locate(const ScalarRule& rule, double z) {
  for (int k = 0; k < rule.num_kinks; ++k) {
    const double kink = rule.kinks[k];
    if (std::abs(z - kink) <= kKinkRelTol * std::max(1.0, std::abs(kink))) return {true, k};
    if (z < kink) return {false, k};
  }
  return {false, rule.num_kinks};
}

double rule_dirderiv(const ScalarRule& rule, double z, double d) {
  const Location loc = locate(rule, z);
  if (!loc.at_kink) return rule.slopes[loc.index] * d;
  return d > 0 ? rule.slopes[loc.index + 1] * d : rule.slopes[loc.index] * d;
}

Mat project_psd(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
         es.eigenvectors().transpose();
}

Mat psd_derivative_apply(const SpectralSplit& s, const Mat& d,
                         const std::function<Mat(const Mat&)>& beta_map) {
  const int m = s.order();
  const Mat dt = s.P.transpose() * d * s.P;
  Mat out = s.Sigma.cwiseProduct(dt);
  const int b0 = s.zero_begin(), nb = s.num_zero;
  if (nb > 0) out.block(b0, b0, nb, nb) = beta_map(dt.block(b0, b0, nb, nb));
  (void)m;
  return s.P * out * s.P.transpose();
}

Mat psd_element_matrix(const SpectralSplit& s, const Mat& z_map) {
  const int len = svec_dim(s.order());
  Mat e(len, len);
  const auto beta = [&](const Mat& dbb) -> Mat { return smat(z_map * svec(dbb)); };
  for (int k = 0; k < len; ++k) {
    e.col(k) = svec(psd_derivative_apply(s, smat(Vec::Unit(len, k)), beta));
  }
  return 0.5 * (e + e.transpose());
}

}  // namespace detail

bool ExtendedValue::finite() const { return std::isfinite(value); }

double value(const ConvexPiece& piece, const Vec& z) {
  check_dim(piece, z, "value");
  const double tol = member_tol(z);
  if (piece.as<PsdIndicator>()) {
    Eigen::SelfAdjointEigenSolver<Mat> es(smat(z), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol ? 0.0 : kInf;
  }
  if (auto o = piece.as<OrthantIndicator>()) {
    const bool ok = o->sign == OrthantSign::kNonNegative ? z.minCoeff() >= -tol
                                                         : z.maxCoeff() <= tol;
    return ok ? 0.0 : kInf;
  }
  if (auto b = piece.as<BoxIndicator>()) {
    const bool ok = ((z.array() >= b->lower.array() - tol) &&
                     (z.array() <= b->upper.array() + tol))
                        .all();
    return ok ? 0.0 : kInf;
  }
  if (piece.as<L1Norm>()) return z.lpNorm<1>();
  const auto& inner = detail::inner_of(piece);
  return z[0] + value(inner, z.tail(inner.dim()));
}

double conjugate_value(const ConvexPiece& piece, const Vec& w) {
  check_dim(piece, w, "conjugate_value");
  const double tol = member_tol(w);
  if (piece.as<PsdIndicator>()) {
    Eigen::SelfAdjointEigenSolver<Mat> es(smat(w), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff() <= tol ? 0.0 : kInf;
  }
  if (auto o = piece.as<OrthantIndicator>()) {
    const bool ok = o->sign == OrthantSign::kNonNegative ? w.maxCoeff() <= tol
                                                         : w.minCoeff() >= -tol;
    return ok ? 0.0 : kInf;
  }
  if (auto b = piece.as<BoxIndicator>()) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (w[i] > 0) {
        if (std::isinf(b->upper[i])) return kInf;
        sum += b->upper[i] * w[i];
      } else if (w[i] < 0) {
        if (std::isinf(b->lower[i])) return kInf;
        sum += b->lower[i] * w[i];
      }
    }
    return sum;
  }
  if (piece.as<L1Norm>()) return w.lpNorm<Eigen::Infinity>() <= 1.0 + tol ? 0.0 : kInf;
  const auto& inner = detail::inner_of(piece);
  if (std::abs(w[0] - 1.0) > tol) return kInf;
  return conjugate_value(inner, w.tail(inner.dim()));
}

Vec prox(const ConvexPiece& piece, const Vec& z, double sigma) {
  check_dim(piece, z, "prox");
  if (!(sigma > 0)) throw PreconditionError("prox: sigma must be positive");
  if (piece.as<PsdIndicator>()) return svec(detail::project_psd(smat(z)));
  if (auto o = piece.as<OrthantIndicator>()) {
    return o->sign == OrthantSign::kNonNegative ? Vec(z.cwiseMax(0.0)) : Vec(z.cwiseMin(0.0));
  }
  if (auto b = piece.as<BoxIndicator>()) return z.cwiseMax(b->lower).cwiseMin(b->upper);
  if (piece.as<L1Norm>()) {
    return z.unaryExpr([sigma](double t) { return soft_threshold(t, sigma); });
  }
  const auto& inner = detail::inner_of(piece);
  Vec out(z.size());
  out[0] = z[0] - sigma;
  out.tail(inner.dim()) = prox(inner, z.tail(inner.dim()), sigma);
  return out;
}

Vec prox_conjugate(const ConvexPiece& piece, const Vec& z, double sigma) {
  check_dim(piece, z, "prox_conjugate");
  if (!(sigma > 0)) throw PreconditionError("prox_conjugate: sigma must be positive");
  if (piece.as<PsdIndicator>()) return -svec(detail::project_psd(-smat(z)));
  if (auto o = piece.as<OrthantIndicator>()) {
    return o->sign == OrthantSign::kNonNegative ? Vec(z.cwiseMin(0.0)) : Vec(z.cwiseMax(0.0));
  }
  if (auto b = piece.as<BoxIndicator>()) {
    Vec out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double up = z[i] - sigma * b->upper[i];
      const double down = z[i] - sigma * b->lower[i];
      out[i] = up > 0 ? up : (down < 0 ? down : 0.0);
    }
    return out;
  }
  if (piece.as<L1Norm>()) return z.cwiseMax(-1.0).cwiseMin(1.0);
  const auto& inner = detail::inner_of(piece);
  Vec out(z.size());
  out[0] = 1.0;
  out.tail(inner.dim()) = prox_conjugate(inner, z.tail(inner.dim()), sigma);
  return out;
}

Envelope moreau_envelope(const ConvexPiece& piece, const Vec& z, double sigma) {
  const Vec p = prox(piece, z, sigma);
  return {value(piece, p) + (p - z).squaredNorm() / (2.0 * sigma), (z - p) / sigma};
}

Vec prox_dirderiv(const ConvexPiece& piece, const Vec& z, const Vec& d, double sigma) {
  check_dim(piece, z, "prox_dirderiv");
  check_dim(piece, d, "prox_dirderiv");
  if (piece.as<PsdIndicator>()) {
    const SpectralSplit s = eig_split(smat(z));
    return svec(detail::psd_derivative_apply(s, smat(d), detail::project_psd));
  }
  if (piece.is_separable()) {
    Vec out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      out[i] = detail::rule_dirderiv(detail::prox_rule(piece, static_cast<int>(i), sigma), z[i],
                                     d[i]);
    }
    return out;
  }
  const auto& inner = detail::inner_of(piece);
  Vec out(z.size());
  out[0] = d[0];
  out.tail(inner.dim()) = prox_dirderiv(inner, z.tail(inner.dim()), d.tail(inner.dim()), sigma);
  return out;
}

Vec prox_conjugate_dirderiv(const ConvexPiece& piece, const Vec& z, const Vec& d) {
  check_dim(piece, z, "prox_conjugate_dirderiv");
  check_dim(piece, d, "prox_conjugate_dirderiv");
  if (piece.as<PsdIndicator>()) {
    // Projection onto the negative cone is -Pi(-A); differentiate that form.
    const SpectralSplit s = eig_split(-smat(z));
    return -svec(detail::psd_derivative_apply(s, -smat(d), detail::project_psd));
  }
  if (piece.is_separable()) {
    Vec out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      out[i] = detail::rule_dirderiv(detail::conjugate_prox_rule(piece, static_cast<int>(i)),
                                     z[i], d[i]);
    }
    return out;
  }
  const auto& inner = detail::inner_of(piece);
  Vec out(z.size());
  out[0] = 0.0;
  out.tail(inner.dim()) = prox_conjugate_dirderiv(inner, z.tail(inner.dim()), d.tail(inner.dim()));
  return out;
}

}  // namespace kktstab
