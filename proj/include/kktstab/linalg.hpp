#pragma once

#include <vector>

#include <Eigen/Dense>

namespace kktstab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Rng;

// Symmetric vectorization: upper triangle row by row, off-diagonals scaled by sqrt(2),
// so <svec(A), svec(B)> = trace(A B).
int svec_dim(int order);
int svec_order(int dim);
Vec svec(const Mat& a);
Mat smat(const Vec& v);

// svec of P * E_ij * P^T where E_ij is the unit symmetric matrix for the pair (i, j).
Vec rotated_unit(const Mat& p, int i, int j);

// Orthonormal basis of range(a); singular values <= rel_tol * max(1, sigma_max) count as zero.
Mat orthonormal_range(const Mat& a, double rel_tol = 1e-10);
Mat null_space(const Mat& a, double rel_tol = 1e-10);
Mat orthogonal_complement(const Mat& basis, int dim);
int numerical_rank(const Mat& a, double rel_tol);

// Largest distance from a unit column of `from` to span(onto); both orthonormal.
double projection_residual(const Mat& from, const Mat& onto);
double subspace_mismatch(const Mat& a, const Mat& b);

double min_singular_value(const Mat& a);
Mat random_orthogonal(int k, Rng& rng);
Mat block_diagonal(const std::vector<Mat>& blocks);

}  // namespace kktstab
