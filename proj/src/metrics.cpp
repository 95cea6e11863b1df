#include "steinspan/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace steinspan {

AlignResult subspace_align(const Eigen::MatrixXd& theta1,
                           const Eigen::MatrixXd& theta2) {
  if (theta1.rows() != theta2.rows())
    throw std::invalid_argument("subspace_align: frames have " +
                                std::to_string(theta1.rows()) + " and " +
                                std::to_string(theta2.rows()) + " rows");
  Eigen::MatrixXd m = theta2.transpose() * theta1;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  AlignResult out;
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  // The residual is evaluated explicitly rather than through the trace
  // shortcut |t1|^2 + |t2|^2 - 2 sum sigma, whose cancellation error is of
  // order sqrt(machine epsilon) exactly when the frames (nearly) coincide.
  out.distance = (theta1 - theta2 * out.rotation).norm();
  return out;
}

double subspace_dist(const Eigen::MatrixXd& theta1,
                     const Eigen::MatrixXd& theta2) {
  return subspace_align(theta1, theta2).distance;
}

double nrse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& est) {
  if (truth.rows() != est.rows() || truth.cols() != est.cols())
    throw std::invalid_argument("nrse: shape mismatch");
  if (truth.rows() == 0) throw std::invalid_argument("nrse: empty input");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    double ref = truth.row(i).norm();
    if (ref == 0.0)
      throw std::domain_error("nrse: reference row " + std::to_string(i) +
                              " has zero norm");
    acc += (est.row(i) - truth.row(i)).norm() / ref;
  }
  return acc / static_cast<double>(truth.rows());
}

double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double range) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("ssim: shape mismatch");
  if (a.size() == 0) throw std::invalid_argument("ssim: empty input");
  if (!(range > 0.0)) throw std::invalid_argument("ssim: range must be > 0");
  const double n = static_cast<double>(a.size());
  const double mx = a.mean();
  const double my = b.mean();
  const double vx = (a.array() - mx).square().sum() / n;
  const double vy = (b.array() - my).square().sum() / n;
  const double cov = ((a.array() - mx) * (b.array() - my)).sum() / n;
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  return (2.0 * mx * my + c1) * (2.0 * cov + c2) /
         ((mx * mx + my * my + c2) * (vx + vy + c2));
}

double pmse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols())
    throw std::invalid_argument("pmse: shape mismatch");
  if (truth.rows() == 0) throw std::invalid_argument("pmse: empty input");
  return (pred - truth).rowwise().squaredNorm().mean();
}

}  // namespace steinspan
