#include "steinspan/scores.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace steinspan {

namespace {

Eigen::MatrixXd symmetric_inverse(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  Eigen::MatrixXd inv =
      llt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
  return (inv + inv.transpose()) / 2.0;
}

}  // namespace

ScoreField ScoreField::closed_form(const DistributionSpec& spec) {
  validate_spec(spec);
  ScoreField f;
  f.plugin_ = false;
  f.kind_ = spec.kind;
  f.p_ = spec.p;
  f.nu_ = spec.nu;
  f.chi_ = spec.chi;
  f.psi_ = spec.psi;
  f.mu_ = spec.mu.size() ? spec.mu : Eigen::VectorXd::Zero(spec.p);
  f.sigma_ = (spec.sigma + spec.sigma.transpose()) / 2.0;
  f.sigma_pinv_ = symmetric_inverse(f.sigma_);
  f.rank_ = spec.p;
  return f;
}

ScoreField ScoreField::plugin_gaussian(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n < 1 || p < 1)
    throw std::invalid_argument("plugin_gaussian needs a nonempty sample");
  ScoreField f;
  f.plugin_ = true;
  f.kind_ = DistKind::Gaussian;
  f.p_ = static_cast<int>(p);
  f.mu_ = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s = x.transpose() * x / static_cast<double>(n);
  f.sigma_ = (s + s.transpose()) / 2.0;

  // Moore-Penrose pseudo-inverse with the conventional spectral cutoff
  // max(n, p) * eps * sigma_max; rank-deficient sample moments (n < p,
  // duplicated coordinates) are handled instead of failing.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.sigma_);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition of sample moment failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = std::max<double>(static_cast<double>(n), static_cast<double>(p)) *
                        std::numeric_limits<double>::epsilon() *
                        std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(p);
  int rank = 0;
  for (int i = 0; i < p; ++i) {
    if (ev(i) > cutoff) {
      inv(i) = 1.0 / ev(i);
      ++rank;
    }
  }
  Eigen::MatrixXd pinv =
      es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  f.sigma_pinv_ = (pinv + pinv.transpose()) / 2.0;
  f.rank_ = rank;
  return f;
}

Eigen::VectorXd ScoreField::score1(const Eigen::VectorXd& x) const {
  if (x.size() != p_) throw std::invalid_argument("x has wrong length");
  Eigen::VectorXd w = sigma_pinv_ * (x - mu_);
  if (plugin_ || kind_ == DistKind::Gaussian) return w;
  const double quad = (x - mu_).dot(w);
  if (kind_ == DistKind::StudentT)
    return ((p_ + nu_) / (nu_ - 2.0 + quad)) * w;
  // Hyperbolic.
  return (std::sqrt(psi_) / std::sqrt(chi_ + quad)) * w;
}

Eigen::MatrixXd ScoreField::score2(const Eigen::VectorXd& x) const {
  if (x.size() != p_) throw std::invalid_argument("x has wrong length");
  Eigen::VectorXd w = sigma_pinv_ * (x - mu_);
  Eigen::MatrixXd outer = w * w.transpose();
  if (plugin_ || kind_ == DistKind::Gaussian) return outer - sigma_pinv_;
  const double quad = (x - mu_).dot(w);
  if (kind_ == DistKind::StudentT) {
    const double a = nu_ - 2.0 + quad;
    return ((p_ + nu_) * (p_ + nu_ + 2.0) * outer -
            (p_ + nu_) * a * sigma_pinv_) /
           (a * a);
  }
  // Hyperbolic.
  const double a = chi_ + quad;
  const double u = std::sqrt(a);
  const double sp = std::sqrt(psi_);
  return ((psi_ + sp / u) * outer - sp * u * sigma_pinv_) / a;
}

Eigen::MatrixXd ScoreField::score1_all(const Eigen::MatrixXd& x) const {
  if (x.cols() != p_) throw std::invalid_argument("x has wrong width");
  Eigen::MatrixXd centered = x;
  if (mu_.cwiseAbs().maxCoeff() > 0.0)
    centered.rowwise() -= mu_.transpose();
  Eigen::MatrixXd w = centered * sigma_pinv_;  // row i = (pinv (x_i - mu))^T
  if (plugin_ || kind_ == DistKind::Gaussian) return w;
  Eigen::VectorXd quad = (centered.array() * w.array()).rowwise().sum();
  Eigen::ArrayXd fac(x.rows());
  if (kind_ == DistKind::StudentT)
    fac = (p_ + nu_) / (nu_ - 2.0 + quad.array());
  else
    fac = std::sqrt(psi_) / (chi_ + quad.array()).sqrt();
  return w.array().colwise() * fac;
}

Eigen::VectorXd finite_diff_score1(const DistributionSpec& spec,
                                   const Eigen::VectorXd& x, double h) {
  const int p = spec.p;
  Eigen::VectorXd g(p);
  Eigen::VectorXd e = x;
  for (int i = 0; i < p; ++i) {
    e(i) = x(i) + h;
    double up = log_density(spec, e);
    e(i) = x(i) - h;
    double dn = log_density(spec, e);
    e(i) = x(i);
    g(i) = (up - dn) / (2.0 * h);
  }
  return -g;
}

Eigen::MatrixXd finite_diff_score2(const DistributionSpec& spec,
                                   const Eigen::VectorXd& x, double h) {
  // grad^2 P / P = grad^2 log P + (grad log P)(grad log P)^T, with both
  // pieces taken from central differences of the log-density.
  const int p = spec.p;
  const double center = log_density(spec, x);
  Eigen::VectorXd g = -finite_diff_score1(spec, x, h);
  Eigen::MatrixXd hess(p, p);
  Eigen::VectorXd e = x;
  for (int i = 0; i < p; ++i) {
    e(i) = x(i) + h;
    double up = log_density(spec, e);
    e(i) = x(i) - h;
    double dn = log_density(spec, e);
    e(i) = x(i);
    hess(i, i) = (up - 2.0 * center + dn) / (h * h);
  }
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      e(i) = x(i) + h;
      e(j) = x(j) + h;
      double pp = log_density(spec, e);
      e(j) = x(j) - h;
      double pm = log_density(spec, e);
      e(i) = x(i) - h;
      double mm = log_density(spec, e);
      e(j) = x(j) + h;
      double mp = log_density(spec, e);
      e(i) = x(i);
      e(j) = x(j);
      hess(i, j) = hess(j, i) = (pp - pm - mp + mm) / (4.0 * h * h);
    }
  }
  return hess + g * g.transpose();
}

}  // namespace steinspan
