#pragma once

#include <Eigen/Dense>

namespace steinspan {

// Result of aligning one frame onto another with an orthogonal factor.
struct AlignResult {
  double distance = 0.0;
  Eigen::MatrixXd rotation;  // the minimizing orthogonal factor V
};

// Orthogonal-Procrustes distance between two column frames:
//   min over orthogonal V of ||theta1 - theta2 * V||_F.
// Both frames must have the same number of rows. The minimizer is recovered
// from the SVD of theta2^T * theta1. For orthonormal frames with the same
// column count r the distance lies in [0, sqrt(2 r)].
AlignResult subspace_align(const Eigen::MatrixXd& theta1,
                           const Eigen::MatrixXd& theta2);

double subspace_dist(const Eigen::MatrixXd& theta1,
                     const Eigen::MatrixXd& theta2);

// Mean over rows (samples) of the relative reconstruction error
// ||est_i - truth_i|| / ||truth_i||. Throws std::domain_error when a row of
// the reference has zero norm, naming the offending row.
double nrse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& est);

// Global structural-similarity score over all matrix entries, using
// population moments and stabilizers c1 = (0.01 * range)^2,
// c2 = (0.03 * range)^2:
//
//   (2 mx my + c1) (2 cov + c2) / ((mx^2 + my^2 + c2) (vx + vy + c2))
//
// The same stabilizer c2 appears in both denominator factors; this matches
// the reference definition this library reproduces, so the score of a matrix
// with itself is slightly below one whenever c1 != c2.
double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double range);

// Mean over rows of the squared Euclidean distance between predicted and
// reference response vectors.
double pmse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred);

}  // namespace steinspan
