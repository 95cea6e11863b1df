// Statistical verification battery. Each numbered criterion prints exactly
// one PASS/FAIL line with its measured quantities and wall time; the process
// exits nonzero if any criterion fails. These are the project's exit gates:
// exact equivalences and identities where closed forms exist, and
// convergence-rate / ordering reproductions at desk scale where the claims
// are statistical.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "steinspan/distributions.hpp"
#include "steinspan/estimators.hpp"
#include "steinspan/experiments.hpp"
#include "steinspan/metrics.hpp"
#include "steinspan/rng.hpp"
#include "steinspan/scores.hpp"
#include "steinspan/simulation.hpp"

using namespace steinspan;

namespace {

int failures = 0;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void verdict(int id, bool pass, const std::string& name,
             const std::string& detail, double secs, double budget) {
  const bool in_budget = budget <= 0 || secs <= budget;
  if (!in_budget) pass = false;
  std::printf("[%d] %s  %s: %s (%.1f s%s)\n", id, pass ? "PASS" : "FAIL",
              name.c_str(), detail.c_str(), secs,
              in_budget ? "" : ", over budget");
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

DistributionSpec spec_for(DistKind kind, int p, Rng& rng) {
  DistributionSpec spec;
  spec.kind = kind;
  spec.p = p;
  spec.sigma = generate_dispersion(p, DispersionRecipe{}, rng);
  spec.nu = 10.0;
  spec.chi = 2.0 * p + 1.0;
  spec.psi = p;
  return spec;
}

// 1: the first-order estimator with a plug-in Gaussian score on the
// self-response y = x spans the same subspace as the leading principal
// components, to numerical precision.
void criterion_1() {
  Stopwatch sw;
  double worst = 0.0;
  bool degenerate = false;
  for (int s = 0; s < 20; ++s) {
    Rng rng(derive_seed(101, "pca-equivalence", s));
    DistributionSpec spec = spec_for(DistKind::Gaussian, 10, rng);
    Eigen::MatrixXd x = sample(spec, 500, rng.next_u64());
    PcaCheck chk = check_pca_equivalence(x, 3);
    degenerate = degenerate || chk.degenerate;
    worst = std::max(worst, chk.distance);
  }
  verdict(1, worst < 1e-8 && !degenerate, "pca-equivalence",
          "max dist " + fmt(worst) + " over 20 seeds, tol 1e-8", sw.seconds(),
          10.0);
}

// 2: closed-form scores against finite differences of the log-density.
void criterion_2() {
  Stopwatch sw;
  double worst1 = 0.0, worst2 = 0.0;
  for (DistKind kind :
       {DistKind::Gaussian, DistKind::StudentT, DistKind::Hyperbolic}) {
    Rng rng(derive_seed(102, "score-fd", static_cast<int>(kind)));
    DistributionSpec spec = spec_for(kind, 5, rng);
    ScoreField field = ScoreField::closed_form(spec);
    Eigen::MatrixXd xs = sample(spec, 100, rng);
    for (int i = 0; i < xs.rows(); ++i) {
      Eigen::VectorXd x = xs.row(i).transpose();
      worst1 = std::max(worst1, (field.score1(x) - finite_diff_score1(spec, x))
                                    .cwiseAbs()
                                    .maxCoeff());
      worst2 = std::max(worst2, (field.score2(x) - finite_diff_score2(spec, x))
                                    .cwiseAbs()
                                    .maxCoeff());
    }
  }
  verdict(2, worst1 < 1e-5 && worst2 < 1e-4, "score-correctness",
          "first-order dev " + fmt(worst1) + " (tol 1e-5), second-order dev " +
              fmt(worst2) + " (tol 1e-4), 100 points x 3 designs",
          sw.seconds(), 30.0);
}

// 3: the two moment identities at Monte Carlo scale. With linear responses
// y = z C^T the first-order cross moment converges to B C^T; with quadratic
// responses y_j = z^T Q_j z the averaged second-order moment converges to
// 2 B Qbar B^T. Both hold for every sampling design with a valid score.
void criterion_3() {
  Stopwatch sw;
  const int n = 100000, p = 6, r = 2, q = 4;
  double worst = 0.0;
  for (DistKind kind :
       {DistKind::Gaussian, DistKind::StudentT, DistKind::Hyperbolic}) {
    Rng rng(derive_seed(103, "stein-identities", static_cast<int>(kind)));
    DistributionSpec spec = spec_for(kind, p, rng);
    ScoreField field = ScoreField::closed_form(spec);
    Eigen::MatrixXd b = generate_basis(p, r, 0.0, 1.0, rng);
    Eigen::MatrixXd x = sample(spec, n, rng.next_u64());
    Eigen::MatrixXd z = x * b;

    Eigen::MatrixXd c(q, r);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < r; ++j) c(i, j) = rng.normal();
    Eigen::MatrixXd y_lin = z * c.transpose();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < q; ++j) y_lin(i, j) += 0.1 * rng.normal();
    Eigen::MatrixXd m1_hat = field.score1_all(x).transpose() * y_lin / n;
    Eigen::MatrixXd m1 = b * c.transpose();
    worst = std::max(worst, (m1_hat - m1).norm() / m1.norm());

    Eigen::MatrixXd qbar = Eigen::MatrixXd::Zero(r, r);
    Eigen::VectorXd ybar = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < q; ++j) {
      Eigen::MatrixXd qj(r, r);
      for (int a = 0; a < r; ++a)
        for (int bb = 0; bb <= a; ++bb) {
          qj(a, bb) = rng.normal();
          qj(bb, a) = qj(a, bb);
        }
      qbar += qj / q;
      ybar += ((z * qj).array() * z.array()).rowwise().sum().matrix() / q;
    }
    for (int i = 0; i < n; ++i) ybar(i) += 0.1 * rng.normal() / q;
    Eigen::MatrixXd m2_hat = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < n; ++i)
      m2_hat += ybar(i) * field.score2(x.row(i).transpose());
    m2_hat /= n;
    Eigen::MatrixXd m2 = 2.0 * b * qbar * b.transpose();
    worst = std::max(worst, (m2_hat - m2).norm() / m2.norm());
  }
  verdict(3, worst < 0.05, "stein-identities",
          "max relative Frobenius error " + fmt(worst) +
              " at n=1e5 over 3 designs x 2 orders, tol 0.05",
          sw.seconds(), 60.0);
}

// 4: the closed-form alignment distance against brute force over the
// orthogonal group: sign enumeration for one column, a 3600-point rotation
// and reflection grid for two.
void criterion_4() {
  Stopwatch sw;
  Rng rng(derive_seed(104, "procrustes-oracle", 0));
  double worst = 0.0;
  bool never_above = true;
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::MatrixXd t1 = generate_basis(6, 1, 0.0, 1.0, rng);
    Eigen::MatrixXd t2 = generate_basis(6, 1, 0.0, 1.0, rng);
    const double d = subspace_dist(t1, t2);
    const double oracle = std::min((t1 - t2).norm(), (t1 + t2).norm());
    worst = std::max(worst, std::abs(d - oracle));
    never_above = never_above && d <= oracle + 1e-12;
  }
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::MatrixXd t1 = generate_basis(6, 2, 0.0, 1.0, rng);
    Eigen::MatrixXd t2 = generate_basis(6, 2, 0.0, 1.0, rng);
    const double d = subspace_dist(t1, t2);
    double oracle = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 1800; ++k) {
      const double a = 2.0 * M_PI * k / 1800.0;
      Eigen::Matrix2d rot, ref;
      rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
      ref << std::cos(a), std::sin(a), std::sin(a), -std::cos(a);
      oracle =
          std::min({oracle, (t1 - t2 * rot).norm(), (t1 - t2 * ref).norm()});
    }
    worst = std::max(worst, std::abs(d - oracle));
    never_above = never_above && d <= oracle + 1e-12;
  }
  verdict(4, worst <= 1e-3 && never_above, "alignment-oracle",
          "max |closed form - brute force| " + fmt(worst) +
              " over 50 pairs, tol 1e-3, never above: " +
              (never_above ? "yes" : "no"),
          sw.seconds(), 20.0);
}

std::vector<std::pair<double, double>> medians_by_n(
    const std::vector<ResultRecord>& records, const std::vector<int>& n_grid,
    const std::string& method) {
  std::vector<std::pair<double, double>> pts;
  for (int n : n_grid)
    pts.emplace_back(n, median_distance(records, [&](const ResultRecord& s) {
                       return s.n == n && s.method == method;
                     }));
  return pts;
}

// 5: first-order convergence rate on the desk grid, expected near n^{-1/2}.
void criterion_5() {
  Stopwatch sw;
  ExperimentConfig cfg = desk_preset();
  cfg.methods = {"first-order"};
  cfg.score_modes = {"known"};
  std::vector<ResultRecord> recs = run_sweep(cfg);
  RateFit fit =
      fit_rate_slope(medians_by_n(recs, cfg.n_grid, "first-order"));
  verdict(5, fit.slope >= -0.65 && fit.slope <= -0.35, "first-order-rate",
          "log-log slope " + fmt(fit.slope) + " in [-0.65, -0.35], R^2 " +
              fmt(fit.r_squared),
          sw.seconds(), 300.0);
}

// 6: second-order convergence rate on curved links, plus the mandatory
// near-zero refusal on purely linear links.
void criterion_6() {
  Stopwatch sw;
  ExperimentConfig cfg = desk_preset();
  cfg.methods = {"second-order"};
  cfg.score_modes = {"known"};
  cfg.p_grid = {6};
  cfg.mechanisms = {2};
  cfg.link_pool = {6, 7, 9};
  std::vector<ResultRecord> recs = run_sweep(cfg);
  RateFit fit =
      fit_rate_slope(medians_by_n(recs, cfg.n_grid, "second-order"));

  cfg.mechanisms = {1};
  cfg.link_pool = default_link_pool();
  std::vector<ResultRecord> linear = run_sweep(cfg);
  auto all = [](const ResultRecord&) { return true; };
  const std::size_t flagged =
      count_warning(linear, all, "near-zero-matrix");
  verdict(6,
          fit.slope >= -0.70 && fit.slope <= -0.30 &&
              flagged == linear.size(),
          "second-order-rate",
          "slope " + fmt(fit.slope) + " in [-0.70, -0.30]; near-zero on " +
              std::to_string(flagged) + "/" + std::to_string(linear.size()) +
              " linear-link fits",
          sw.seconds(), 600.0);
}

// 7: on linear links the first-order estimator with a plug-in score tracks
// reduced-rank regression, whose coefficient matrix it reproduces up to the
// rank projection.
void criterion_7() {
  Stopwatch sw;
  ExperimentConfig cfg = desk_preset();
  cfg.methods = {"first-order", "rrr"};
  cfg.score_modes = {"plug-in"};
  cfg.mechanisms = {1};
  std::vector<ResultRecord> recs = run_sweep(cfg);
  double worst = 0.0;
  for (int n : cfg.n_grid) {
    if (n < 1000) continue;
    auto by = [&](const std::string& m) {
      return median_distance(recs, [&](const ResultRecord& s) {
        return s.n == n && s.method == m;
      });
    };
    const double fo = by("first-order"), rr = by("rrr");
    worst = std::max(worst, std::abs(fo - rr) / rr);
  }
  verdict(7, worst <= 0.25, "first-order-vs-rrr",
          "max relative median gap " + fmt(worst) + " at n >= 1000, tol 0.25",
          sw.seconds(), 0.0);
}

// 8: the semi-supervised benchmark ordering: pooled fit at or below both the
// labeled-only fit and the label-blind fit in median prediction error.
void criterion_8() {
  Stopwatch sw;
  SemiBenchmarkConfig cfg;  // n_labeled=100, train+labeled pool of 1000, 50 reps
  SemiBenchmarkResult res = run_semi_benchmark(cfg);
  const bool pass =
      res.semi.median_pmse <= res.unsupervised.median_pmse &&
      res.semi.median_pmse <= res.labeled_only.median_pmse;
  verdict(8, pass, "semi-supervised-ordering",
          "median pmse semi " + fmt(res.semi.median_pmse) + " <= labeled " +
              fmt(res.labeled_only.median_pmse) + " and <= unsupervised " +
              fmt(res.unsupervised.median_pmse),
          sw.seconds(), 0.0);
}

// 9: byte-identical sweep results independent of thread count and rerun.
void criterion_9() {
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.methods = {"first-order", "second-order", "pca", "rrr"};
  cfg.dist_kinds = {DistKind::Gaussian, DistKind::StudentT};
  cfg.mechanisms = {1, 2};
  cfg.score_modes = {"known", "plug-in"};
  cfg.p_grid = {6};
  cfg.n_grid = {200};
  cfg.q = 4;
  cfg.r = 2;
  cfg.reps = 3;
  cfg.master_seed = 20240915;
  const std::string serial = results_to_csv(run_sweep(cfg));
  const std::string again = results_to_csv(run_sweep(cfg));
  cfg.threads = 4;
  const std::string parallel = results_to_csv(run_sweep(cfg));
  verdict(9, serial == again && serial == parallel, "determinism",
          "serial rerun identical: " +
              std::string(serial == again ? "yes" : "no") +
              "; 4-thread run identical: " +
              std::string(serial == parallel ? "yes" : "no"),
          sw.seconds(), 0.0);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (failures == 0) {
    std::printf("all 9 criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return 1;
}
