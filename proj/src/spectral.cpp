#include "kktstab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kktstab/errors.hpp"

namespace kktstab {

SpectralSplit::Group SpectralSplit::group(int i) const {
  if (i < num_pos) return Group::kPositive;
  if (i < num_pos + num_zero) return Group::kZero;
  return Group::kNegative;
}

double default_eig_tol(const Mat& a) {
  if (a.size() == 0) return 1e-8;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  const double spectral_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  return 1e-8 * std::max(1.0, spectral_norm);
}

SpectralSplit eig_split(const Mat& a, std::optional<double> tol_eig) {
  if (a.rows() != a.cols()) {
    throw DimensionError("eig_split: matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  const int m = static_cast<int>(a.rows());
  SpectralSplit s;
  if (m == 0) {
    s.tol_eig = tol_eig.value_or(1e-8);
    return s;
  }
  const double asym = (a - a.transpose()).norm();
  if (asym > 1e-12 * std::max(1.0, a.norm())) {
    throw PreconditionError("eig_split: matrix is not symmetric (asymmetry " +
                            std::to_string(asym) + ")");
  }
  const Mat sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.info() != Eigen::Success) {
    Eigen::JacobiSVD<Mat> svd(sym);
    const auto& sv = svd.singularValues();
    std::ostringstream msg;
    msg << "eig_split: eigensolver did not converge on a " << m << "x" << m
        << " matrix (condition estimate " << sv[0] / std::max(sv[m - 1], 1e-300) << ")";
    throw EigenError(msg.str());
  }
  s.P = es.eigenvectors().rowwise().reverse();
  s.lambda = es.eigenvalues().reverse();
  s.tol_eig = tol_eig.value_or(1e-8 * std::max(1.0, s.lambda.cwiseAbs().maxCoeff()));
  for (int i = 0; i < m; ++i) {
    if (s.lambda[i] > s.tol_eig) {
      ++s.num_pos;
    } else if (s.lambda[i] >= -s.tol_eig) {
      ++s.num_zero;
      s.lambda[i] = 0.0;
    } else {
      ++s.num_neg;
    }
  }
  s.Sigma.resize(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double num = std::max(s.lambda[i], 0.0) + std::max(s.lambda[j], 0.0);
      const double den = std::abs(s.lambda[i]) + std::abs(s.lambda[j]);
      s.Sigma(i, j) = den == 0.0 ? 1.0 : num / den;
    }
  }
  return s;
}

}  // namespace kktstab
