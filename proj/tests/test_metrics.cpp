#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "steinspan/distributions.hpp"
#include "steinspan/metrics.hpp"
#include "steinspan/rng.hpp"

using namespace steinspan;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("frame distance matches brute-force search, one column") {
  Rng rng(201);
  for (int rep = 0; rep < 20; ++rep) {
    MatrixXd a(4, 1), b(4, 1);
    for (int i = 0; i < 4; ++i) {
      a(i, 0) = rng.normal();
      b(i, 0) = rng.normal();
    }
    double got = subspace_dist(a, b);
    double brute = oracles::procrustes_brute_r1(a, b);
    CHECK(got == doctest::Approx(brute).epsilon(1e-10));
  }
}

TEST_CASE("frame distance matches brute-force search, two columns") {
  Rng rng(203);
  for (int rep = 0; rep < 5; ++rep) {
    MatrixXd a(5, 2), b(5, 2);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 2; ++j) {
        a(i, j) = rng.normal();
        b(i, j) = rng.normal();
      }
    double got = subspace_dist(a, b);
    double brute = oracles::procrustes_brute_r2(a, b);
    // The sweep uses a 0.1-degree grid, so it slightly overshoots the true
    // minimum from above.
    CHECK(got <= brute + 1e-9);
    CHECK(brute - got < 1e-4 * (1.0 + brute));
  }
}

TEST_CASE("frame distance: invariances and bounds for orthonormal frames") {
  Rng rng(205);
  const int p = 8, r = 3;
  MatrixXd q = haar_orthogonal(p, rng);
  MatrixXd theta = q.leftCols(r);

  SUBCASE("distance to an in-span rotation of itself is zero") {
    MatrixXd rot = haar_orthogonal(r, rng);
    CHECK(subspace_dist(theta, theta * rot) < 1e-12);
    AlignResult res = subspace_align(theta, theta * rot);
    CHECK((res.rotation * res.rotation.transpose() - MatrixXd::Identity(r, r))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }

  SUBCASE("orthogonal spans reach the extreme value sqrt(2 r)") {
    MatrixXd other = q.rightCols(r);
    CHECK(subspace_dist(theta, other) ==
          doctest::Approx(std::sqrt(2.0 * r)).epsilon(1e-12));
  }

  SUBCASE("random orthonormal pairs stay within the bound") {
    for (int rep = 0; rep < 10; ++rep) {
      MatrixXd t1 = haar_orthogonal(p, rng).leftCols(r);
      MatrixXd t2 = haar_orthogonal(p, rng).leftCols(r);
      double d = subspace_dist(t1, t2);
      CHECK(d >= 0.0);
      CHECK(d <= std::sqrt(2.0 * r) + 1e-12);
    }
  }

  SUBCASE("symmetry in its arguments for equal column counts") {
    MatrixXd t2 = haar_orthogonal(p, rng).leftCols(r);
    CHECK(subspace_dist(theta, t2) ==
          doctest::Approx(subspace_dist(t2, theta)).epsilon(1e-12));
  }

  SUBCASE("row mismatch throws") {
    MatrixXd bad = MatrixXd::Zero(p + 1, r);
    CHECK_THROWS_AS(subspace_dist(theta, bad), std::invalid_argument);
  }
}

TEST_CASE("nrse: hand-worked value and zero-row rejection") {
  MatrixXd truth(2, 2), est(2, 2);
  truth << 3, 4, 0.5, 0;
  est << 3, 4, 0.5, 1;
  // Row 0 is exact; row 1 errs by 1 against a reference of norm 0.5.
  CHECK(nrse(truth, est) == doctest::Approx(0.5 * (0.0 + 2.0)).epsilon(1e-14));

  MatrixXd zrow(2, 2);
  zrow << 1, 1, 0, 0;
  CHECK_THROWS_WITH_AS(nrse(zrow, est),
                       doctest::Contains("reference row 1"),
                       std::domain_error);
  MatrixXd short_est(1, 2);
  CHECK_THROWS_AS(nrse(truth, short_est), std::invalid_argument);
}

TEST_CASE("ssim: direct-moment oracle, self-similarity, and perfect score") {
  Rng rng(207);
  MatrixXd a(6, 5), b(6, 5);
  for (int i = 0; i < a.size(); ++i) {
    a(i / 5, i % 5) = 2.0 + rng.normal();
    b(i / 5, i % 5) = 2.0 + rng.normal();
  }
  const double range = 4.0;

  // Independent recomputation with explicit loops.
  double mx = 0, my = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      mx += a(i, j);
      my += b(i, j);
    }
  mx /= a.size();
  my /= b.size();
  double vx = 0, vy = 0, cov = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      vx += (a(i, j) - mx) * (a(i, j) - mx);
      vy += (b(i, j) - my) * (b(i, j) - my);
      cov += (a(i, j) - mx) * (b(i, j) - my);
    }
  vx /= a.size();
  vy /= a.size();
  cov /= a.size();
  double c1 = 0.0016, c2 = 0.0144;  // (0.01*4)^2, (0.03*4)^2
  double expect = (2 * mx * my + c1) * (2 * cov + c2) /
                  ((mx * mx + my * my + c2) * (vx + vy + c2));
  CHECK(ssim(a, b, range) == doctest::Approx(expect).epsilon(1e-13));

  // With itself the score is (2 m^2 + c1) / (2 m^2 + c2): just under one,
  // because the luminance stabilizer differs between numerator and
  // denominator in this definition.
  double self = ssim(a, a, range);
  double m2 = 2 * mx * mx;
  CHECK(self == doctest::Approx((m2 + c1) / (m2 + c2)).epsilon(1e-13));
  CHECK(self < 1.0);
  CHECK(self > 0.99);

  CHECK_THROWS_AS(ssim(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("pmse: hand-worked value") {
  MatrixXd truth(2, 3), pred(2, 3);
  truth << 1, 2, 3, 0, 0, 0;
  pred << 1, 2, 4, 1, 1, 1;
  // Row 0 squared error 1, row 1 squared error 3.
  CHECK(pmse(truth, pred) == doctest::Approx(2.0).epsilon(1e-14));
  MatrixXd bad(1, 3);
  CHECK_THROWS_AS(pmse(truth, bad), std::invalid_argument);
}
