#include "kktstab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kktstab/errors.hpp"
#include "kktstab/rng.hpp"

namespace kktstab {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Vec Rng::normal_vector(int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Vec Rng::unit_sphere(int n) {
  Vec v = normal_vector(n);
  double nv = v.norm();
  while (nv < 1e-12) {
    v = normal_vector(n);
    nv = v.norm();
  }
  return v / nv;
}

Vec Rng::unit_ball(int n) {
  Vec dir = unit_sphere(n);
  return dir * std::pow(uniform(), 1.0 / n);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int svec_dim(int order) { return order * (order + 1) / 2; }

int svec_order(int dim) {
  int m = 0;
  while (svec_dim(m) < dim) ++m;
  if (svec_dim(m) != dim) {
    throw DimensionError("length " + std::to_string(dim) + " is not a triangular number");
  }
  return m;
}

Vec svec(const Mat& a) {
  const int m = static_cast<int>(a.rows());
  Vec v(svec_dim(m));
  int k = 0;
  for (int i = 0; i < m; ++i) {
    v[k++] = a(i, i);
    for (int j = i + 1; j < m; ++j) v[k++] = std::numbers::sqrt2 * 0.5 * (a(i, j) + a(j, i));
  }
  return v;
}

Mat smat(const Vec& v) {
  const int m = svec_order(static_cast<int>(v.size()));
  Mat a(m, m);
  int k = 0;
  for (int i = 0; i < m; ++i) {
    a(i, i) = v[k++];
    for (int j = i + 1; j < m; ++j) {
      a(i, j) = a(j, i) = v[k++] / std::numbers::sqrt2;
    }
  }
  return a;
}

Vec rotated_unit(const Mat& p, int i, int j) {
  Mat e;
  if (i == j) {
    e = p.col(i) * p.col(i).transpose();
  } else {
    e = (p.col(i) * p.col(j).transpose() + p.col(j) * p.col(i).transpose()) / std::numbers::sqrt2;
  }
  return svec(e);
}

namespace {

double threshold(const Eigen::JacobiSVD<Mat>& svd, double rel_tol) {
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s[0] : 0.0;
  return rel_tol * std::max(1.0, smax);
}

}  // namespace

int numerical_rank(const Mat& a, double rel_tol) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const double thr = threshold(svd, rel_tol);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > thr) ++r;
  }
  return r;
}

Mat orthonormal_range(const Mat& a, double rel_tol) {
  if (a.rows() == 0 || a.cols() == 0) return Mat(a.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU);
  const double thr = threshold(svd, rel_tol);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > thr) ++r;
  }
  return svd.matrixU().leftCols(r);
}

Mat null_space(const Mat& a, double rel_tol) {
  const auto n = a.cols();
  if (n == 0) return Mat(0, 0);
  if (a.rows() == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const double thr = threshold(svd, rel_tol);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > thr) ++r;
  }
  return svd.matrixV().rightCols(n - r);
}

Mat orthogonal_complement(const Mat& basis, int dim) {
  if (basis.cols() == 0) return Mat::Identity(dim, dim);
  return null_space(basis.transpose());
}

double projection_residual(const Mat& from, const Mat& onto) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < from.cols(); ++k) {
    Vec v = from.col(k);
    if (onto.cols() > 0) v -= onto * (onto.transpose() * v);
    worst = std::max(worst, v.norm());
  }
  return worst;
}

double subspace_mismatch(const Mat& a, const Mat& b) {
  return std::max(projection_residual(a, b), projection_residual(b, a));
}

double min_singular_value(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().minCoeff();
}

Mat random_orthogonal(int k, Rng& rng) {
  if (k == 0) return Mat(0, 0);
  Mat g(k, k);
  for (int j = 0; j < k; ++j) g.col(j) = rng.normal_vector(k);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR();
  for (int j = 0; j < k; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

Mat block_diagonal(const std::vector<Mat>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Mat out = Mat::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace kktstab
