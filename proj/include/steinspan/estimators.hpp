#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "steinspan/scores.hpp"

namespace steinspan {

// An estimated p x r orthonormal frame for the latent coefficient subspace.
//
// warnings carries advisory tokens:
//   "degenerate-spectrum"  the spectrum of the moment matrix is (numerically)
//                          tied across the cut at rank r, so the returned
//                          frame is one of many equally good choices;
//   "n<=p^2"               too few samples for the second-order noise floor
//                          estimate to be reliable;
//   "rank-deficient"       the fit used a plug-in moment field whose sample
//                          dispersion is singular.
struct LatentBasis {
  Eigen::MatrixXd matrix;
  int rank = 0;
  std::vector<std::string> warnings;
};

// Thrown by the second-order fit when the averaged moment matrix cannot be
// distinguished from zero at its estimated Monte Carlo noise floor. This is
// the expected outcome when every response is linear in the latent indices,
// since the second-order moment then has no curvature to pick up.
class NearZeroMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic sign convention: flips each column so its entry of largest
// magnitude (first such index on ties) is positive.
void orient_columns(Eigen::MatrixXd& m);

// First-order fit: left singular frame of (1/n) sum_i s(x_i) y_i^T.
//
// Singular values that tie within a relative tolerance form a cluster whose
// left vectors are only determined up to rotation; any cluster that overlaps
// the selected range is re-diagonalized against the field's dispersion so the
// returned frame is the canonical one (descending quadratic form). A cluster
// that straddles the cut at r additionally yields "degenerate-spectrum".
LatentBasis first_order_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                            int r, const ScoreField& field);

// Second-order fit: eigenframe of (1/n) sum_i ybar_i T(x_i) (ybar_i is the
// mean of the i-th response vector), keeping the r eigenvectors of largest
// absolute eigenvalue. Throws NearZeroMatrixError when the largest absolute
// eigenvalue does not clear the estimated standard-error floor.
LatentBasis second_order_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             int r, const ScoreField& field);

// Inputs for the semi-supervised variants: a labeled block plus a larger
// covariate pool (which conventionally includes the labeled rows).
struct SemiSupervisedData {
  Eigen::MatrixXd x_labeled;
  Eigen::MatrixXd y_labeled;
  Eigen::MatrixXd x_all;
};

// Semi-supervised first-order fit: the labeled moment (1/n) sum s(x) y^T is
// augmented with the unlabeled self-moment (1/N) sum s(x) x^T, and the left
// singular frame of the horizontal concatenation is returned.
LatentBasis first_order_fit_semi(const SemiSupervisedData& data, int r,
                                 const ScoreField& field);

// Semi-supervised second-order fit: sum of the labeled moment
// (1/n) sum ybar_i T(x_i) and the pool moment (1/N) sum xbar_i T(x_i), where
// xbar_i is the mean entry of the covariate vector itself. No noise-floor
// test is applied: the two blocks are averages over different sample sets, so
// the single-sum variance estimate behind that test does not apply.
LatentBasis second_order_fit_semi(const SemiSupervisedData& data, int r,
                                  const ScoreField& field);

// Principal components of the uncentered second moment x^T x / n.
LatentBasis pca_fit(const Eigen::MatrixXd& x, int r);

// Reduced-rank regression: the minimum-norm least-squares coefficient is
// projected onto the top-r right singular directions of the fitted values,
// and the left singular frame of the projected coefficient is returned.
LatentBasis rrr_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int r);

// Affine read-out y ~ z * w + intercept, fitted by centered minimum-norm
// least squares.
struct LinearDecoder {
  Eigen::MatrixXd w;
  Eigen::VectorXd intercept;
};

LinearDecoder fit_linear_decoder(const Eigen::MatrixXd& z,
                                 const Eigen::MatrixXd& y);

Eigen::MatrixXd decode(const LinearDecoder& dec, const Eigen::MatrixXd& z);

}  // namespace steinspan
