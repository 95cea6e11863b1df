#pragma once

#include <Eigen/Dense>

#include "steinspan/distributions.hpp"

namespace steinspan {

// First- and second-order score fields of a sampling design:
//   score1(x) = -grad log P(x)
//   score2(x) = (grad^2 P)(x) / P(x) = score1 score1^T - grad score1
// Either from the closed forms of a known design, or the Gaussian moment
// plug-in built from a data matrix (uncentered second moment, zero mean).
class ScoreField {
 public:
  static ScoreField closed_form(const DistributionSpec& spec);
  static ScoreField plugin_gaussian(const Eigen::MatrixXd& x);

  Eigen::VectorXd score1(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd score2(const Eigen::VectorXd& x) const;

  // All first-order scores of a sample, one row per observation.
  Eigen::MatrixXd score1_all(const Eigen::MatrixXd& x) const;

  int dim() const { return p_; }
  bool is_plugin() const { return plugin_; }

  // The dispersion the field is built around: sigma for closed forms, the
  // uncentered sample second moment for the plug-in. Estimators use it to
  // settle degenerate spectra (see first_order_fit).
  const Eigen::MatrixXd& dispersion() const { return sigma_; }
  const Eigen::MatrixXd& dispersion_pinv() const { return sigma_pinv_; }
  int dispersion_rank() const { return rank_; }

 private:
  ScoreField() = default;

  bool plugin_ = false;
  DistKind kind_ = DistKind::Gaussian;
  int p_ = 0;
  double nu_ = 0.0, chi_ = 0.0, psi_ = 0.0;
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd sigma_pinv_;
  int rank_ = 0;
};

// Central finite differences of the log-density; reference implementations
// used to cross-check the closed forms.
Eigen::VectorXd finite_diff_score1(const DistributionSpec& spec,
                                   const Eigen::VectorXd& x, double h = 1e-5);
Eigen::MatrixXd finite_diff_score2(const DistributionSpec& spec,
                                   const Eigen::VectorXd& x, double h = 1e-4);

}  // namespace steinspan
