#include "kktstab/structured_set.hpp"

#include <cmath>
#include <limits>

#include "kktstab/errors.hpp"

namespace kktstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_cone_bound(double b) { return b == 0.0 || std::isinf(b); }

Mat rotated(const SpectralPart& s, const Vec& segment) {
  return s.P.transpose() * smat(segment) * s.P;
}

}  // namespace

void StructuredSet::add(IntervalPart part) {
  if (part.lower.size() != part.upper.size() ||
      part.offset + part.lower.size() > dim_) {
    throw DimensionError("StructuredSet: interval part out of range");
  }
  parts_.emplace_back(std::move(part));
}

void StructuredSet::add(SpectralPart part) {
  if (part.offset + svec_dim(part.order) > dim_) {
    throw DimensionError("StructuredSet: spectral part out of range");
  }
  parts_.emplace_back(std::move(part));
}

void StructuredSet::append(const StructuredSet& other, int offset) {
  for (const auto& p : other.parts_) {
    std::visit(
        [&](auto part) {
          part.offset += offset;
          add(std::move(part));
        },
        p);
  }
}

Vec StructuredSet::project(const Vec& v) const {
  Vec out = v;
  for (const auto& p : parts_) {
    if (auto iv = std::get_if<IntervalPart>(&p)) {
      const auto n = iv->lower.size();
      out.segment(iv->offset, n) =
          v.segment(iv->offset, n).cwiseMax(iv->lower).cwiseMin(iv->upper);
    } else {
      const auto& s = std::get<SpectralPart>(p);
      const int len = svec_dim(s.order);
      Mat wt = rotated(s, v.segment(s.offset, len));
      for (int i = 0; i < s.order; ++i) {
        for (int j = 0; j < s.order; ++j) {
          if (!s.in_semi(i, j) && s.mask(i, j) == 0) wt(i, j) = 0.0;
        }
      }
      const int nb = s.semi_end - s.semi_begin;
      if (nb > 0) {
        Eigen::SelfAdjointEigenSolver<Mat> es(wt.block(s.semi_begin, s.semi_begin, nb, nb));
        Vec lam = es.eigenvalues();
        lam = s.semi_sign > 0 ? Vec(lam.cwiseMax(0.0)) : Vec(lam.cwiseMin(0.0));
        wt.block(s.semi_begin, s.semi_begin, nb, nb) =
            es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
      }
      out.segment(s.offset, len) = svec(s.P * wt * s.P.transpose());
    }
  }
  return out;
}

bool StructuredSet::contains(const Vec& v, double tol) const {
  if (v.size() != dim_) throw DimensionError("StructuredSet::contains: dimension mismatch");
  for (const auto& p : parts_) {
    if (auto iv = std::get_if<IntervalPart>(&p)) {
      for (Eigen::Index k = 0; k < iv->lower.size(); ++k) {
        const double x = v[iv->offset + k];
        if (x < iv->lower[k] - tol || x > iv->upper[k] + tol) return false;
      }
    } else {
      const auto& s = std::get<SpectralPart>(p);
      const Mat wt = rotated(s, v.segment(s.offset, svec_dim(s.order)));
      double pinned = 0.0;
      for (int i = 0; i < s.order; ++i) {
        for (int j = 0; j < s.order; ++j) {
          if (!s.in_semi(i, j) && s.mask(i, j) == 0) pinned += wt(i, j) * wt(i, j);
        }
      }
      if (std::sqrt(pinned) > tol) return false;
      const int nb = s.semi_end - s.semi_begin;
      if (nb > 0) {
        Eigen::SelfAdjointEigenSolver<Mat> es(wt.block(s.semi_begin, s.semi_begin, nb, nb),
                                              Eigen::EigenvaluesOnly);
        const Vec lam = s.semi_sign * es.eigenvalues();
        if (lam.minCoeff() < -tol) return false;
      }
    }
  }
  return true;
}

bool StructuredSet::is_polyhedral() const {
  for (const auto& p : parts_) {
    if (std::holds_alternative<SpectralPart>(p)) return false;
  }
  return true;
}

bool StructuredSet::is_cone() const {
  for (const auto& p : parts_) {
    if (auto iv = std::get_if<IntervalPart>(&p)) {
      for (Eigen::Index k = 0; k < iv->lower.size(); ++k) {
        if (!is_cone_bound(iv->lower[k]) || !is_cone_bound(iv->upper[k])) return false;
      }
    }
  }
  return true;
}

StructuredSet StructuredSet::polar() const {
  if (!is_cone()) throw PreconditionError("StructuredSet::polar: set is not a cone");
  StructuredSet out(dim_);
  std::vector<bool> covered(dim_, false);
  for (const auto& p : parts_) {
    if (auto iv = std::get_if<IntervalPart>(&p)) {
      IntervalPart q{iv->offset, Vec(iv->lower.size()), Vec(iv->lower.size())};
      for (Eigen::Index k = 0; k < iv->lower.size(); ++k) {
        covered[iv->offset + k] = true;
        const bool neg_open = std::isinf(iv->lower[k]);
        const bool pos_open = std::isinf(iv->upper[k]);
        // An open side of the cone pins the matching side of the polar.
        q.lower[k] = neg_open ? 0.0 : -kInf;
        q.upper[k] = pos_open ? 0.0 : kInf;
      }
      out.add(std::move(q));
    } else {
      SpectralPart s = std::get<SpectralPart>(p);
      for (int k = 0; k < svec_dim(s.order); ++k) covered[s.offset + k] = true;
      s.mask = (1 - s.mask.array()).matrix();
      s.semi_sign = -s.semi_sign;
      out.add(std::move(s));
    }
  }
  for (int i = 0; i < dim_; ++i) {
    if (!covered[i]) out.add(IntervalPart{i, Vec::Zero(1), Vec::Zero(1)});
  }
  return out;
}

namespace {

template <class Keep, class KeepSpectral>
Mat collect_basis(int dim, const std::vector<std::variant<IntervalPart, SpectralPart>>& parts,
                  Keep keep_interval, KeepSpectral keep_entry) {
  std::vector<Vec> cols;
  std::vector<bool> covered(dim, false);
  for (const auto& p : parts) {
    if (auto iv = std::get_if<IntervalPart>(&p)) {
      for (Eigen::Index k = 0; k < iv->lower.size(); ++k) {
        covered[iv->offset + k] = true;
        if (keep_interval(iv->lower[k], iv->upper[k])) {
          cols.push_back(Vec::Unit(dim, iv->offset + k));
        }
      }
    } else {
      const auto& s = std::get<SpectralPart>(p);
      for (int k = 0; k < svec_dim(s.order); ++k) covered[s.offset + k] = true;
      for (int i = 0; i < s.order; ++i) {
        for (int j = i; j < s.order; ++j) {
          if (!keep_entry(s, i, j)) continue;
          Vec c = Vec::Zero(dim);
          c.segment(s.offset, svec_dim(s.order)) = rotated_unit(s.P, i, j);
          cols.push_back(std::move(c));
        }
      }
    }
  }
  for (int i = 0; i < dim; ++i) {
    if (!covered[i]) cols.push_back(Vec::Unit(dim, i));
  }
  Mat b(dim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) b.col(static_cast<Eigen::Index>(k)) = cols[k];
  return b;
}

}  // namespace

Mat StructuredSet::span_basis() const {
  if (!is_cone()) throw PreconditionError("StructuredSet::span_basis: set is not a cone");
  return collect_basis(
      dim_, parts_, [](double lo, double hi) { return !(lo == 0.0 && hi == 0.0); },
      [](const SpectralPart& s, int i, int j) { return s.in_semi(i, j) || s.mask(i, j) == 1; });
}

Mat StructuredSet::lineality_basis() const {
  if (!is_cone()) throw PreconditionError("StructuredSet::lineality_basis: set is not a cone");
  return collect_basis(
      dim_, parts_, [](double lo, double hi) { return std::isinf(lo) && std::isinf(hi); },
      [](const SpectralPart& s, int i, int j) { return !s.in_semi(i, j) && s.mask(i, j) == 1; });
}

std::vector<int> StructuredSet::coordinate_signs() const {
  if (!is_polyhedral() || !is_cone()) {
    throw PreconditionError("StructuredSet::coordinate_signs: not a polyhedral cone");
  }
  std::vector<int> sign(dim_, 2);
  for (const auto& p : parts_) {
    const auto& iv = std::get<IntervalPart>(p);
    for (Eigen::Index k = 0; k < iv.lower.size(); ++k) {
      const double lo = iv.lower[k], hi = iv.upper[k];
      int s = 2;
      if (lo == 0.0 && hi == 0.0) {
        s = 0;
      } else if (lo == 0.0) {
        s = 1;
      } else if (hi == 0.0) {
        s = -1;
      }
      sign[iv.offset + k] = s;
    }
  }
  return sign;
}

}  // namespace kktstab
