#include <algorithm>
#include <cmath>
#include <sstream>

#include "kktstab/errors.hpp"
#include "kktstab/prox.hpp"
#include "kktstab/rng.hpp"
#include "piece_internal.hpp"

namespace kktstab {

namespace {

constexpr int kSeparablePatternCap = 64;
constexpr int kPsdPatternCap = 32;

struct Slopes {
  int left = 0;
  int right = 0;
};

// Per-coordinate one-sided slopes of the separable prox at z (equal away from kinks).
std::vector<Slopes> coordinate_slopes(const ConvexPiece& piece, const Vec& z) {
  std::vector<Slopes> out(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const auto rule = detail::prox_rule(piece, static_cast<int>(i), 1.0);
    const auto loc = detail::locate(rule, z[i]);
    if (loc.at_kink) {
      out[i] = {rule.slopes[loc.index], rule.slopes[loc.index + 1]};
    } else {
      out[i] = {rule.slopes[loc.index], rule.slopes[loc.index]};
    }
  }
  return out;
}

void dedupe(std::vector<LinearOperatorElement>& list) {
  std::vector<LinearOperatorElement> kept;
  for (auto& e : list) {
    const bool seen = std::any_of(kept.begin(), kept.end(), [&](const auto& k) {
      return (k.matrix - e.matrix).norm() <= 1e-12;
    });
    if (!seen) kept.push_back(std::move(e));
  }
  list = std::move(kept);
}

void add_convex_combinations(std::vector<LinearOperatorElement>& list, int count, Rng& rng) {
  std::vector<std::size_t> b_index;
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (list[k].b_element) b_index.push_back(k);
  }
  if (b_index.size() < 2) return;
  for (int c = 0; c < count; ++c) {
    const int nb = static_cast<int>(b_index.size());
    const int a = rng.below(nb);
    int b = rng.below(nb - 1);
    if (b >= a) ++b;
    const auto i = b_index[static_cast<std::size_t>(a)];
    const auto j = b_index[static_cast<std::size_t>(b)];
    const double t = rng.uniform(0.05, 0.95);
    std::ostringstream tag;
    tag << "convex(" << list[i].provenance << "," << list[j].provenance << ")";
    list.push_back({t * list[i].matrix + (1.0 - t) * list[j].matrix, tag.str(), false});
  }
}

std::string bits_string(const std::vector<int>& bits) {
  std::string s;
  for (int b : bits) s.push_back(b ? '1' : '0');
  return s;
}

LinearOperatorElement separable_element(const std::vector<Slopes>& slopes,
                                        const std::vector<int>& kink_coords,
                                        const std::vector<int>& choice, std::string tag) {
  const auto n = static_cast<Eigen::Index>(slopes.size());
  Vec diag(n);
  for (Eigen::Index i = 0; i < n; ++i) diag[i] = std::max(slopes[i].left, slopes[i].right);
  for (std::size_t k = 0; k < kink_coords.size(); ++k) {
    const auto& s = slopes[static_cast<std::size_t>(kink_coords[k])];
    diag[kink_coords[k]] = choice[k] ? std::max(s.left, s.right) : std::min(s.left, s.right);
  }
  return {Mat(diag.asDiagonal()), std::move(tag), true};
}

std::vector<LinearOperatorElement> separable_samples(const ConvexPiece& piece, const Vec& z,
                                                     int count, Rng& rng) {
  const auto slopes = coordinate_slopes(piece, z);
  std::vector<int> kinks;
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    if (slopes[i].left != slopes[i].right) kinks.push_back(static_cast<int>(i));
  }
  const auto k = kinks.size();
  std::vector<LinearOperatorElement> list;
  list.push_back(separable_element(slopes, kinks, std::vector<int>(k, 1), "separable:canonical"));
  if (k == 0) return list;
  list.push_back(separable_element(slopes, kinks, std::vector<int>(k, 0), "separable:pattern=" +
                                                                            std::string(k, '0')));
  if (k <= 6) {
    for (std::uint64_t mask = 0; mask < (1ULL << k); ++mask) {
      std::vector<int> bits(k);
      for (std::size_t b = 0; b < k; ++b) bits[b] = static_cast<int>((mask >> b) & 1ULL);
      list.push_back(separable_element(slopes, kinks, bits, "separable:pattern=" + bits_string(bits)));
    }
  } else {
    for (int p = 0; p < kSeparablePatternCap; ++p) {
      std::vector<int> bits(k);
      for (auto& b : bits) b = static_cast<int>(rng.bits() & 1ULL);
      list.push_back(separable_element(slopes, kinks, bits, "separable:pattern=" + bits_string(bits)));
    }
  }
  dedupe(list);
  add_convex_combinations(list, count, rng);
  return list;
}

// Z(H) = Q (Omega o (Q^T H Q)) Q^T with Omega built from signed magnitudes; this is the
// limiting derivative of the projection at Q diag(eps * nu) Q^T as eps -> 0.
Mat beta_pattern_map(const Mat& q, const Vec& nu) {
  const int k = static_cast<int>(nu.size());
  Mat omega(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      omega(i, j) = (std::max(nu[i], 0.0) + std::max(nu[j], 0.0)) /
                    (std::abs(nu[i]) + std::abs(nu[j]));
    }
  }
  const int len = svec_dim(k);
  Mat z(len, len);
  for (int c = 0; c < len; ++c) {
    const Mat h = smat(Vec::Unit(len, c));
    z.col(c) = svec(q * omega.cwiseProduct(q.transpose() * h * q) * q.transpose());
  }
  return z;
}

std::vector<LinearOperatorElement> psd_samples(const Vec& z, int count, Rng& rng) {
  const SpectralSplit s = eig_split(smat(z));
  const int nb = s.num_zero;
  const int len = svec_dim(nb);
  std::vector<LinearOperatorElement> list;
  list.push_back({detail::psd_element_matrix(s, Mat::Identity(len, len)), "psd:canonical", true});
  if (nb == 0) return list;
  list.push_back({detail::psd_element_matrix(s, Mat::Zero(len, len)), "psd:zero-beta", true});
  const int patterns = std::min(count, kPsdPatternCap);
  for (int p = 0; p < patterns; ++p) {
    const Mat q = random_orthogonal(nb, rng);
    Vec nu(nb);
    std::vector<int> bits(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i) {
      bits[static_cast<std::size_t>(i)] = static_cast<int>(rng.bits() & 1ULL);
      const double magnitude = std::pow(10.0, rng.uniform(-2.0, 2.0));
      nu[i] = bits[static_cast<std::size_t>(i)] ? magnitude : -magnitude;
    }
    list.push_back({detail::psd_element_matrix(s, beta_pattern_map(q, nu)),
                    "psd:beta-pattern=" + bits_string(bits), true});
  }
  dedupe(list);
  add_convex_combinations(list, count, rng);
  return list;
}

}  // namespace

LinearOperatorElement clarke_element(const ConvexPiece& piece, const Vec& z) {
  if (z.size() != piece.dim()) throw DimensionError("clarke_element: dimension mismatch");
  if (piece.as<PsdIndicator>()) {
    const SpectralSplit s = eig_split(smat(z));
    const int len = svec_dim(s.num_zero);
    return {detail::psd_element_matrix(s, Mat::Identity(len, len)), "psd:canonical", true};
  }
  if (piece.is_separable()) {
    const auto slopes = coordinate_slopes(piece, z);
    return separable_element(slopes, {}, {}, "separable:canonical");
  }
  const auto& inner = detail::inner_of(piece);
  auto e = clarke_element(inner, z.tail(inner.dim()));
  e.matrix = block_diagonal({Mat::Identity(1, 1), e.matrix});
  e.provenance = "epi:" + e.provenance;
  return e;
}

std::vector<LinearOperatorElement> sample_clarke(const ConvexPiece& piece, const Vec& z, int count,
                                                 std::uint64_t seed) {
  if (count < 1) throw PreconditionError("sample_clarke: count must be >= 1 (empty list requested)");
  if (z.size() != piece.dim()) throw DimensionError("sample_clarke: dimension mismatch");
  Rng rng(seed);
  if (piece.as<PsdIndicator>()) return psd_samples(z, count, rng);
  if (piece.is_separable()) return separable_samples(piece, z, count, rng);
  const auto& inner = detail::inner_of(piece);
  auto list = sample_clarke(inner, z.tail(inner.dim()), count, seed);
  for (auto& e : list) {
    e.matrix = block_diagonal({Mat::Identity(1, 1), e.matrix});
    e.provenance = "epi:" + e.provenance;
  }
  return list;
}

}  // namespace kktstab
