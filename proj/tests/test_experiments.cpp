#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "steinspan/distributions.hpp"
#include "steinspan/experiments.hpp"
#include "steinspan/rng.hpp"

using namespace steinspan;

namespace {

ExperimentConfig micro_config() {
  ExperimentConfig c;
  c.methods = {"first-order", "pca"};
  c.dist_kinds = {DistKind::Gaussian};
  c.mechanisms = {1};
  c.score_modes = {"known"};
  c.p_grid = {6};
  c.n_grid = {100, 200};
  c.q = 4;
  c.r = 2;
  c.reps = 3;
  c.master_seed = 77;
  return c;
}

}  // namespace

TEST_CASE("run_sweep enumerates the grid deterministically") {
  ExperimentConfig c = micro_config();
  auto records = run_sweep(c);
  REQUIRE(records.size() == 12);
  // Nesting order: method, then p/n grid, then reps.
  CHECK(records[0].method == "first-order");
  CHECK(records[0].n == 100);
  CHECK(records[0].rep == 0);
  CHECK(records[5].method == "first-order");
  CHECK(records[5].n == 200);
  CHECK(records[5].rep == 2);
  CHECK(records[6].method == "pca");
  CHECK(records[6].score_mode == "none");
  for (const auto& r : records) {
    CHECK(std::isfinite(r.distance));
    CHECK(r.distance >= 0.0);
    CHECK(r.wall_ms == 0.0);
    CHECK(r.q == 4);
  }
}

TEST_CASE("methods inside one cell see the same dataset seed") {
  auto records = run_sweep(micro_config());
  for (int i = 0; i < 6; ++i) {
    const auto& fo = records[i];
    const auto& pca = records[6 + i];
    CHECK(fo.n == pca.n);
    CHECK(fo.rep == pca.rep);
    CHECK(fo.seed == pca.seed);
  }
}

TEST_CASE("sweeps are byte-identical across reruns and thread counts") {
  ExperimentConfig c = micro_config();
  std::string serial = results_to_csv(run_sweep(c));
  std::string again = results_to_csv(run_sweep(c));
  CHECK(serial == again);
  c.threads = 3;
  std::string parallel = results_to_csv(run_sweep(c));
  CHECK(serial == parallel);
}

TEST_CASE("timing stays zero unless explicitly requested") {
  ExperimentConfig c = micro_config();
  c.methods = {"first-order"};
  c.n_grid = {200};
  c.reps = 2;
  c.measure_timing = true;
  auto records = run_sweep(c);
  bool any_positive = false;
  for (const auto& r : records) any_positive = any_positive || r.wall_ms > 0.0;
  CHECK(any_positive);
}

TEST_CASE("second-order sweep flags every linear-response repetition") {
  ExperimentConfig c = micro_config();
  c.methods = {"second-order"};
  c.n_grid = {400};
  c.reps = 4;
  auto records = run_sweep(c);
  REQUIRE(records.size() == 4);
  auto all = [](const ResultRecord&) { return true; };
  CHECK(count_warning(records, all, "near-zero-matrix") == 4);
  for (const auto& r : records) CHECK(std::isnan(r.distance));
  CHECK(std::isnan(median_distance(records, all)));
}

TEST_CASE("semi-supervised methods run inside the sweep") {
  ExperimentConfig c = micro_config();
  c.methods = {"first-order-semi", "second-order-semi"};
  c.mechanisms = {2};
  c.n_grid = {300};
  c.reps = 2;
  c.labeled_fraction = 0.2;
  auto records = run_sweep(c);
  REQUIRE(records.size() == 4);
  for (const auto& r : records) {
    CHECK(std::isfinite(r.distance));
    CHECK(r.distance >= 0.0);
  }
}

TEST_CASE("median_distance: midpoint rule and NaN exclusion") {
  std::vector<ResultRecord> recs(5);
  recs[0].distance = 0.5;
  recs[1].distance = 0.1;
  recs[2].distance = std::numeric_limits<double>::quiet_NaN();
  recs[3].distance = 0.3;
  recs[4].distance = 0.2;
  auto all = [](const ResultRecord&) { return true; };
  CHECK(median_distance(recs, all) == doctest::Approx(0.25).epsilon(1e-14));
  recs.resize(4);  // now odd count of finite values: 0.5, 0.1, 0.3
  CHECK(median_distance(recs, all) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(std::isnan(median_distance(
      recs, [](const ResultRecord&) { return false; })));
}

TEST_CASE("count_warning matches whole tokens only") {
  std::vector<ResultRecord> recs(3);
  recs[0].warnings = "near-zero-matrix";
  recs[1].warnings = "rank-deficient;near-zero-matrix";
  recs[2].warnings = "degenerate-spectrum";
  auto all = [](const ResultRecord&) { return true; };
  CHECK(count_warning(recs, all, "near-zero-matrix") == 2);
  CHECK(count_warning(recs, all, "near-zero") == 0);
  CHECK(count_warning(recs, all, "rank-deficient") == 1);
  CHECK(count_warning(recs, all, "spectrum") == 0);
}

TEST_CASE("fit_rate_slope recovers exact power laws") {
  std::vector<std::pair<double, double>> pts;
  for (double n : {250.0, 500.0, 1000.0, 2000.0})
    pts.emplace_back(n, 3.0 * std::pow(n, -0.5));
  RateFit fit = fit_rate_slope(pts);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.used == 4);

  // Nonpositive medians are dropped, not fatal, as long as three points
  // survive.
  pts.emplace_back(4000.0, 0.0);
  pts.emplace_back(8000.0, std::nan(""));
  RateFit pruned = fit_rate_slope(pts);
  CHECK(pruned.used == 4);
  CHECK(pruned.slope == doctest::Approx(-0.5).epsilon(1e-12));

  std::vector<std::pair<double, double>> two = {{100.0, 0.5}, {200.0, 0.4}};
  CHECK_THROWS_AS(fit_rate_slope(two), std::invalid_argument);
  std::vector<std::pair<double, double>> flat = {
      {100.0, 0.5}, {100.0, 0.4}, {100.0, 0.3}};
  CHECK_THROWS_AS(fit_rate_slope(flat), std::invalid_argument);
}

TEST_CASE("pca equivalence check: generic sample agrees, tied spectrum flags") {
  Rng rng(501);
  DistributionSpec spec;
  spec.kind = DistKind::Gaussian;
  spec.p = 10;
  spec.sigma = generate_dispersion(10, DispersionRecipe{1.0, 1.0}, rng);
  Eigen::MatrixXd x = sample(spec, 500, rng);
  PcaCheck chk = check_pca_equivalence(x, 3);
  CHECK(chk.distance < 1e-8);
  CHECK_FALSE(chk.degenerate);

  // A sample whose second moment is exactly the identity has a fully tied
  // spectrum, so the cut is ambiguous and must be flagged.
  const int p = 4;
  Eigen::MatrixXd iso = Eigen::MatrixXd::Zero(2 * p, p);
  for (int i = 0; i < p; ++i) {
    iso(i, i) = std::sqrt(2.0);
    iso(p + i, i) = -std::sqrt(2.0);
  }
  PcaCheck tied = check_pca_equivalence(iso, 2);
  CHECK(tied.degenerate);
}

TEST_CASE("sweep configuration validation") {
  ExperimentConfig c = micro_config();
  c.methods = {"gradient-boost"};
  CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);

  c = micro_config();
  c.mechanisms = {2};
  c.q = 5;
  CHECK_THROWS_WITH_AS(run_sweep(c), doctest::Contains("q must be even"),
                       std::invalid_argument);

  c = micro_config();
  c.labeled_fraction = 0.0;
  CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);

  c = micro_config();
  c.p_grid = {1};
  CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);

  c = micro_config();
  c.score_modes = {"oracle"};
  CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);
}

TEST_CASE("results_to_csv: header, order, and NaN rendering") {
  std::vector<ResultRecord> recs(1);
  recs[0].method = "second-order";
  recs[0].dist_kind = DistKind::StudentT;
  recs[0].mechanism = 1;
  recs[0].score_mode = "known";
  recs[0].p = 6;
  recs[0].q = 4;
  recs[0].r = 2;
  recs[0].sigma_eps = 0.5;
  recs[0].n = 400;
  recs[0].rep = 7;
  recs[0].seed = 12345;
  recs[0].distance = std::numeric_limits<double>::quiet_NaN();
  recs[0].warnings = "near-zero-matrix";
  std::string csv = results_to_csv(recs);
  CHECK(csv ==
        "method,dist_kind,link_mech,score_mode,p,q,r,sigma_eps,n,rep,seed,"
        "distance,wall_ms,warnings\n"
        "second-order,student-t,1,known,6,4,2,0.5,400,7,12345,nan,0,"
        "near-zero-matrix\n");
}

TEST_CASE("presets match their documented grids") {
  ExperimentConfig desk = desk_preset();
  CHECK(desk.p_grid == std::vector<int>{10});
  CHECK(desk.n_grid == std::vector<int>{250, 500, 1000, 2000, 4000});
  CHECK(desk.q == 10);
  CHECK(desk.r == 2);
  CHECK(desk.reps == 30);

  ExperimentConfig paper = paper_default_preset();
  CHECK(paper.p_grid == std::vector<int>{30, 50, 80, 100});
  CHECK(paper.n_grid ==
        std::vector<int>{300, 500, 1000, 3000, 5000, 7000, 9000});
  CHECK(paper.q == 20);
  CHECK(paper.r == 3);
  CHECK(paper.reps == 100);
  CHECK(paper.methods.size() == 4);
  CHECK(paper.dist_kinds.size() == 3);
}

TEST_CASE("semi-supervised benchmark: orderings and determinism") {
  SemiBenchmarkConfig cfg;
  cfg.reps = 50;
  SemiBenchmarkResult res = run_semi_benchmark(cfg);

  // Pooling unlabeled features must not hurt relative to the labeled pairs
  // alone, and both supervised arms must beat the label-blind baseline.
  CHECK(res.semi.median_dist <= res.labeled_only.median_dist);
  CHECK(res.semi.median_pmse <= res.labeled_only.median_pmse);
  CHECK(res.semi.median_pmse <= res.unsupervised.median_pmse);
  CHECK(res.semi.median_pmse > 0.0);

  SemiBenchmarkResult again = run_semi_benchmark(cfg);
  CHECK(res.semi.median_pmse == again.semi.median_pmse);
  CHECK(res.labeled_only.median_dist == again.labeled_only.median_dist);
  CHECK(res.unsupervised.median_pmse == again.unsupervised.median_pmse);

  cfg.r = 0;
  CHECK_THROWS_AS(run_semi_benchmark(cfg), std::invalid_argument);
  cfg.r = 3;
  cfg.factor_scale = Eigen::Vector2d(1.0, 2.0);
  CHECK_THROWS_AS(run_semi_benchmark(cfg), std::invalid_argument);
}
