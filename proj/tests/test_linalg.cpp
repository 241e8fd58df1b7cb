#include <cmath>

#include "kktstab/errors.hpp"
#include "kktstab/rng.hpp"
#include "kktstab/spectral.hpp"
#include "support.hpp"

using namespace kktstab;
using namespace kktstab::test;

namespace {

// Direct reading of the coupling-coefficient definition, one scalar at a time.
double sigma_brute(double a, double b) {
  const double num = std::max(a, 0.0) + std::max(b, 0.0);
  const double den = std::abs(a) + std::abs(b);
  if (num == 0.0 && den == 0.0) return 1.0;
  return num / den;
}

Mat random_symmetric(int k, Rng& rng) {
  Mat g(k, k);
  for (int j = 0; j < k; ++j) g.col(j) = rng.normal_vector(k);
  return 0.5 * (g + g.transpose());
}

}  // namespace

TEST_CASE("svec is an isometry and smat inverts it") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const int k = 1 + t % 4;
    const Mat a = random_symmetric(k, rng), b = random_symmetric(k, rng);
    CHECK(svec(a).size() == svec_dim(k));
    CHECK(svec_order(svec_dim(k)) == k);
    CHECK(dist(smat(svec(a)), a) < 1e-14);
    CHECK(std::abs(svec(a).dot(svec(b)) - (a.array() * b.array()).sum()) < 1e-12);
  }
  CHECK_THROWS_AS(svec_order(4), DimensionError);
}

TEST_CASE("rotated units form an orthonormal basis") {
  Rng rng(5);
  const Mat p = random_orthogonal(3, rng);
  Mat basis(6, 6);
  int c = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) basis.col(c++) = rotated_unit(p, i, j);
  }
  CHECK(dist(Mat(basis.transpose() * basis), Mat(Mat::Identity(6, 6))) < 1e-12);
}

TEST_CASE("eig_split on diag(2, 0, -1)") {
  const SpectralSplit s = eig_split(diag({2.0, 0.0, -1.0}), 1e-8);
  CHECK(s.num_pos == 1);
  CHECK(s.num_zero == 1);
  CHECK(s.num_neg == 1);
  // Eigenvalues sorted descending, so indices map straight to (2, 0, -1).
  CHECK(s.lambda[0] == doctest::Approx(2.0));
  CHECK(s.lambda[1] == 0.0);
  CHECK(s.lambda[2] == doctest::Approx(-1.0));
  CHECK(s.Sigma(0, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(s.Sigma(0, 1) == doctest::Approx(1.0));
  CHECK(s.Sigma(1, 1) == doctest::Approx(1.0));
  CHECK(s.Sigma(1, 2) == doctest::Approx(0.0));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(s.Sigma(i, j) == doctest::Approx(sigma_brute(s.lambda[i], s.lambda[j])).epsilon(1e-14));
    }
  }
}

TEST_CASE("eig_split of zero and identity") {
  const SpectralSplit z = eig_split(Mat::Zero(3, 3));
  CHECK(z.num_zero == 3);
  CHECK(z.Sigma.isOnes());
  const SpectralSplit id = eig_split(Mat::Identity(3, 3));
  CHECK(id.num_pos == 3);
  CHECK(id.Sigma.isOnes());
}

TEST_CASE("eig_split invariants on random matrices") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const int k = 1 + t % 5;
    Mat a = random_symmetric(k, rng);
    if (t % 3 == 0) {
      // Plant exact zero eigenvalues.
      const Mat q = random_orthogonal(k, rng);
      Vec lam = rng.normal_vector(k);
      for (int i = 0; i < k; i += 2) lam[i] = 0.0;
      a = q * lam.asDiagonal() * q.transpose();
    }
    const SpectralSplit s = eig_split(a);
    CHECK(dist(Mat(s.P.transpose() * s.P), Mat(Mat::Identity(k, k))) <= 1e-12 * k);
    CHECK(s.num_pos + s.num_zero + s.num_neg == k);
    for (int i = 0; i < k; ++i) {
      switch (s.group(i)) {
        case SpectralSplit::Group::kPositive: CHECK(s.lambda[i] > s.tol_eig); break;
        case SpectralSplit::Group::kZero: CHECK(s.lambda[i] == 0.0); break;
        case SpectralSplit::Group::kNegative: CHECK(s.lambda[i] < -s.tol_eig); break;
      }
      for (int j = 0; j < k; ++j) {
        CHECK(s.Sigma(i, j) >= 0.0);
        CHECK(s.Sigma(i, j) <= 1.0);
        CHECK(s.Sigma(i, j) == s.Sigma(j, i));
        CHECK(s.Sigma(i, j) == doctest::Approx(sigma_brute(s.lambda[i], s.lambda[j])).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("eig_split rejects asymmetric input") {
  Mat a(2, 2);
  a << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(eig_split(a), PreconditionError);
}

TEST_CASE("null space and range helpers") {
  Mat a(2, 3);
  a << 1, 0, 1, 0, 1, 1;
  const Mat n = null_space(a);
  REQUIRE(n.cols() == 1);
  CHECK((a * n).norm() < 1e-14);
  CHECK(numerical_rank(a, 1e-10) == 2);
  CHECK(orthonormal_range(a).cols() == 2);
  CHECK(subspace_mismatch(orthogonal_complement(n, 3), orthonormal_range(a.transpose())) < 1e-12);
}

TEST_CASE("rng is deterministic per seed and stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.bits() == b.bits());
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  Rng c(7);
  for (int i = 0; i < 100; ++i) CHECK(c.unit_ball(4).norm() <= 1.0);
}
