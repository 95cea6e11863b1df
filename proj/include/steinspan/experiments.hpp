#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "steinspan/distributions.hpp"
#include "steinspan/simulation.hpp"

namespace steinspan {

// Grid definition for a Monte Carlo sweep. The cross product of methods,
// distributions, mechanisms, score modes, p_grid and n_grid is enumerated in
// that nesting order with reps repetitions each; every repetition derives its
// own seed from master_seed and the cell coordinates, so results do not
// depend on execution order or thread count.
//
// methods: "first-order", "second-order", "pca", "rrr", "first-order-semi",
//          "second-order-semi".
// score_modes: "known" (closed-form field on the true dispersion) or
//          "plug-in" (Gaussian moment field fitted on the covariates); "pca"
//          and "rrr" use no score and run once per cell with mode "none".
struct ExperimentConfig {
  std::vector<std::string> methods = {"first-order"};
  std::vector<DistKind> dist_kinds = {DistKind::Gaussian};
  std::vector<int> mechanisms = {1};
  std::vector<std::string> score_modes = {"known"};
  std::vector<int> p_grid = {10};
  std::vector<int> n_grid = {1000};
  int q = 10;
  int r = 2;
  int reps = 30;
  double sigma_eps = 0.5;
  double nu = 10.0;
  double mu0 = 0.0;
  double sigma0 = 1.0;
  DispersionRecipe recipe;
  std::vector<int> link_pool = default_link_pool();
  double labeled_fraction = 0.1;  // used by the semi-supervised methods
  std::uint64_t master_seed = 1;
  int threads = 1;
  // Timing is off by default because wall-clock values differ between runs,
  // which would break byte-identical result files.
  bool measure_timing = false;
};

struct ResultRecord {
  std::string method;
  DistKind dist_kind = DistKind::Gaussian;
  int mechanism = 1;
  std::string score_mode;
  int p = 0;
  int q = 0;
  int r = 0;
  double sigma_eps = 0.0;
  int n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double distance = 0.0;  // NaN when the fit failed (see warnings)
  double wall_ms = 0.0;
  std::string warnings;   // ';'-joined advisory tokens
};

// Runs the whole grid and returns records in enumeration order.
std::vector<ResultRecord> run_sweep(const ExperimentConfig& config);

// Serializes records under the fixed header
//   method,dist_kind,link_mech,score_mode,p,q,r,sigma_eps,n,rep,seed,
//   distance,wall_ms,warnings
// with shortest round-trip numeric formatting.
std::string results_to_csv(const std::vector<ResultRecord>& records);

// Median distance over the records selected by keep, ignoring NaN distances;
// NaN when nothing is selected. Even counts take the midpoint average.
double median_distance(const std::vector<ResultRecord>& records,
                       const std::function<bool(const ResultRecord&)>& keep);

// How many selected records carry the given warning token.
std::size_t count_warning(const std::vector<ResultRecord>& records,
                          const std::function<bool(const ResultRecord&)>& keep,
                          const std::string& token);

// Ordinary least squares of ln(median) against ln(n); the convergence-rate
// summary of a sweep. Points with nonpositive or non-finite coordinates are
// excluded (their count shows up as given - used); at least three usable
// points are required.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  int used = 0;
};

RateFit fit_rate_slope(const std::vector<std::pair<double, double>>& n_median);

// Self-response equivalence probe: distance between the first-order fit with
// a plug-in field on y = x and the principal components of the same sample.
// degenerate reports a (near-)tie of the sample second moment's spectrum at
// the cut, in which case neither frame is uniquely determined.
struct PcaCheck {
  double distance = 0.0;
  bool degenerate = false;
};

PcaCheck check_pca_equivalence(const Eigen::MatrixXd& x, int r);

// Prediction benchmark on features with a planted low-rank factor structure
// whose labels share the same basis:
//   x = B diag(factor_scale) u + noise_x eta,    labels = (B^T x) A^T + eps,
// with A's column k scaled by label_scale(k). Each repetition splits the
// sample into test / train / labeled blocks, estimates a basis three ways
// (semi-supervised from the labeled pairs plus the train+labeled covariate
// pool, labeled-only from the labeled block, and the unsupervised
// self-response fit on the pool), trains a linear decoder per basis on the
// train block, and scores squared prediction error on the test block. All
// fits use plug-in score fields; the semi and unsupervised arms estimate
// theirs from the pool while the labeled-only arm sees nothing beyond the
// labeled block.
struct SemiBenchmarkConfig {
  int p = 90;
  int r = 3;
  int q = 16;
  int n_test = 200;
  int n_train = 900;
  int n_labeled = 100;
  int reps = 50;
  // Empty selects 0.5 - 0.1 * k for k = 0..r-1: factors weak enough that the
  // sample covariance of the pooled features cannot resolve them, so a purely
  // unsupervised fit is blind to the latent directions while the labels still
  // expose them through the cross moment.
  Eigen::VectorXd factor_scale;
  Eigen::VectorXd label_scale;  // empty equalizes per-coordinate label power
  double noise_x = 1.0;
  double sigma_eps = 1.0;
  std::uint64_t master_seed = 1;
};

struct SemiBenchmarkArm {
  double median_pmse = 0.0;
  double median_dist = 0.0;
};

struct SemiBenchmarkResult {
  SemiBenchmarkArm semi;
  SemiBenchmarkArm labeled_only;
  SemiBenchmarkArm unsupervised;
};

SemiBenchmarkResult run_semi_benchmark(const SemiBenchmarkConfig& config);

// Small grid sized for laptop runs and the bundled verification battery.
ExperimentConfig desk_preset();

// The full study grid: q = 20, r = 3, p in {30,50,80,100},
// n in {300,...,9000}, 100 repetitions, all families and mechanisms.
ExperimentConfig paper_default_preset();

}  // namespace steinspan
