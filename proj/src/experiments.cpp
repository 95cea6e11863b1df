#include "steinspan/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "steinspan/estimators.hpp"
#include "steinspan/io.hpp"
#include "steinspan/metrics.hpp"
#include "steinspan/scores.hpp"

namespace steinspan {

namespace {

constexpr const char* kMethods[] = {"first-order",      "second-order",
                                    "pca",              "rrr",
                                    "first-order-semi", "second-order-semi"};

bool known_method(const std::string& m) {
  for (const char* k : kMethods)
    if (m == k) return true;
  return false;
}

bool uses_score(const std::string& method) {
  return method != "pca" && method != "rrr";
}

bool is_semi(const std::string& method) {
  return method == "first-order-semi" || method == "second-order-semi";
}

void validate_config(const ExperimentConfig& c) {
  if (c.methods.empty()) throw std::invalid_argument("sweep: no methods");
  for (const auto& m : c.methods)
    if (!known_method(m))
      throw std::invalid_argument("sweep: unknown method '" + m + "'");
  if (c.dist_kinds.empty())
    throw std::invalid_argument("sweep: no distributions");
  if (c.mechanisms.empty()) throw std::invalid_argument("sweep: no mechanisms");
  for (int m : c.mechanisms) {
    if (m < 1 || m > 3)
      throw std::invalid_argument("sweep: mechanism " + std::to_string(m) +
                                  " outside {1, 2, 3}");
    if (m != 1 && c.q % 2 != 0)
      throw std::invalid_argument(
          "sweep: q must be even under the nonlinear mechanisms");
  }
  if (c.score_modes.empty()) throw std::invalid_argument("sweep: no score modes");
  for (const auto& s : c.score_modes)
    if (s != "known" && s != "plug-in")
      throw std::invalid_argument("sweep: unknown score mode '" + s + "'");
  if (c.p_grid.empty() || c.n_grid.empty())
    throw std::invalid_argument("sweep: empty grid");
  for (int p : c.p_grid)
    if (p < 1 || p < c.r)
      throw std::invalid_argument("sweep: p grid incompatible with r");
  for (int n : c.n_grid)
    if (n < 1) throw std::invalid_argument("sweep: n must be positive");
  if (c.q < 1 || c.r < 1) throw std::invalid_argument("sweep: bad q or r");
  if (c.reps < 1) throw std::invalid_argument("sweep: reps must be positive");
  if (c.sigma_eps < 0) throw std::invalid_argument("sweep: bad sigma_eps");
  if (!(c.labeled_fraction > 0.0) || c.labeled_fraction > 1.0)
    throw std::invalid_argument("sweep: labeled_fraction outside (0, 1]");
  if (c.threads < 0) throw std::invalid_argument("sweep: bad thread count");
}

struct RecordPlan {
  std::string method;
  DistKind kind = DistKind::Gaussian;
  int mechanism = 1;
  std::string score_mode;
  int p = 0;
  int n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
};

// The dataset seed is derived from the data coordinates only, so every
// method and score mode inside one grid cell sees the same draws; method
// comparisons are paired.
std::string data_tag(const ExperimentConfig& c, DistKind kind, int mech, int p,
                     int n) {
  std::ostringstream os;
  os << "dist=" << dist_kind_name(kind) << "|mech=" << mech << "|p=" << p
     << "|q=" << c.q << "|r=" << c.r << "|n=" << n
     << "|eps=" << format_double(c.sigma_eps);
  return os.str();
}

std::string join_warnings(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ';';
    out += t;
  }
  return out;
}

ResultRecord run_plan(const RecordPlan& plan, const ExperimentConfig& cfg) {
  ResultRecord rec;
  rec.method = plan.method;
  rec.dist_kind = plan.kind;
  rec.mechanism = plan.mechanism;
  rec.score_mode = plan.score_mode;
  rec.p = plan.p;
  rec.q = cfg.q;
  rec.r = cfg.r;
  rec.sigma_eps = cfg.sigma_eps;
  rec.n = plan.n;
  rec.rep = plan.rep;
  rec.seed = plan.seed;

  std::vector<std::string> warnings;
  try {
    SimulationSpec ss;
    ss.kind = plan.kind;
    ss.p = plan.p;
    ss.q = cfg.q;
    ss.r = cfg.r;
    ss.mechanism = plan.mechanism;
    ss.n = plan.n;
    ss.sigma_eps = cfg.sigma_eps;
    ss.nu = cfg.nu;
    ss.mu0 = cfg.mu0;
    ss.sigma0 = cfg.sigma0;
    ss.recipe = cfg.recipe;
    ss.link_pool = cfg.link_pool;
    ss.seed = plan.seed;
    SyntheticDataset data = generate_dataset(ss);

    const auto t0 = std::chrono::steady_clock::now();
    LatentBasis fit;
    if (uses_score(plan.method)) {
      ScoreField field = [&] {
        if (plan.score_mode == "plug-in")
          return ScoreField::plugin_gaussian(data.x);
        DistributionSpec dist;
        dist.kind = data.spec.kind;
        dist.p = data.spec.p;
        dist.sigma = data.sigma;
        dist.nu = data.spec.nu;
        dist.chi = data.spec.chi;
        dist.psi = data.spec.psi;
        return ScoreField::closed_form(dist);
      }();
      if (is_semi(plan.method)) {
        Rng split_rng(plan.split_seed);
        int n_labeled = static_cast<int>(
            std::lround(cfg.labeled_fraction * plan.n));
        n_labeled = std::clamp(n_labeled, 1, plan.n);
        SplitProtocol protocol;
        protocol.n_train = plan.n - n_labeled;
        protocol.n_labeled = n_labeled;
        SemiSupervisedData split = semi_data_from_split(
            data.x, data.y,
            split_semi_supervised(plan.n, protocol, split_rng));
        fit = plan.method == "first-order-semi"
                  ? first_order_fit_semi(split, cfg.r, field)
                  : second_order_fit_semi(split, cfg.r, field);
      } else if (plan.method == "first-order") {
        fit = first_order_fit(data.x, data.y, cfg.r, field);
      } else {
        fit = second_order_fit(data.x, data.y, cfg.r, field);
      }
    } else if (plan.method == "pca") {
      fit = pca_fit(data.x, cfg.r);
    } else {
      fit = rrr_fit(data.x, data.y, cfg.r);
    }
    if (cfg.measure_timing) {
      const auto t1 = std::chrono::steady_clock::now();
      rec.wall_ms =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    warnings = fit.warnings;
    rec.distance = subspace_dist(fit.matrix, data.b);
  } catch (const NearZeroMatrixError&) {
    rec.distance = std::numeric_limits<double>::quiet_NaN();
    warnings.emplace_back("near-zero-matrix");
  } catch (const std::exception&) {
    rec.distance = std::numeric_limits<double>::quiet_NaN();
    warnings.emplace_back("fit-error");
  }
  rec.warnings = join_warnings(warnings);
  return rec;
}

}  // namespace

std::vector<ResultRecord> run_sweep(const ExperimentConfig& config) {
  validate_config(config);

  std::vector<RecordPlan> plans;
  for (const auto& method : config.methods) {
    const std::vector<std::string> modes =
        uses_score(method) ? config.score_modes
                           : std::vector<std::string>{"none"};
    for (DistKind kind : config.dist_kinds)
      for (int mech : config.mechanisms)
        for (const auto& mode : modes)
          for (int p : config.p_grid)
            for (int n : config.n_grid) {
              const std::string tag = data_tag(config, kind, mech, p, n);
              for (int rep = 0; rep < config.reps; ++rep) {
                RecordPlan plan;
                plan.method = method;
                plan.kind = kind;
                plan.mechanism = mech;
                plan.score_mode = mode;
                plan.p = p;
                plan.n = n;
                plan.rep = rep;
                plan.seed = derive_seed(config.master_seed, tag,
                                        static_cast<std::uint64_t>(rep));
                plan.split_seed =
                    derive_seed(config.master_seed, tag + "|split",
                                static_cast<std::uint64_t>(rep));
                plans.push_back(std::move(plan));
              }
            }
  }

  std::vector<ResultRecord> out(plans.size());
  unsigned threads = config.threads == 0
                         ? std::max(1u, std::thread::hardware_concurrency())
                         : static_cast<unsigned>(config.threads);
  if (threads <= 1) {
    for (std::size_t i = 0; i < plans.size(); ++i)
      out[i] = run_plan(plans[i], config);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= plans.size()) break;
        out[i] = run_plan(plans[i], config);
      }
    });
  for (auto& th : pool) th.join();
  return out;
}

std::string results_to_csv(const std::vector<ResultRecord>& records) {
  std::string out =
      "method,dist_kind,link_mech,score_mode,p,q,r,sigma_eps,n,rep,seed,"
      "distance,wall_ms,warnings\n";
  for (const auto& r : records) {
    out += r.method;
    out += ',';
    out += dist_kind_name(r.dist_kind);
    out += ',';
    out += std::to_string(r.mechanism);
    out += ',';
    out += r.score_mode;
    out += ',';
    out += std::to_string(r.p);
    out += ',';
    out += std::to_string(r.q);
    out += ',';
    out += std::to_string(r.r);
    out += ',';
    out += format_double(r.sigma_eps);
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += std::to_string(r.rep);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += format_double(r.distance);
    out += ',';
    out += format_double(r.wall_ms);
    out += ',';
    out += r.warnings;
    out += '\n';
  }
  return out;
}

double median_distance(const std::vector<ResultRecord>& records,
                       const std::function<bool(const ResultRecord&)>& keep) {
  std::vector<double> vals;
  for (const auto& r : records)
    if (keep(r) && !std::isnan(r.distance)) vals.push_back(r.distance);
  if (vals.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(vals.begin(), vals.end());
  const std::size_t m = vals.size() / 2;
  return vals.size() % 2 ? vals[m] : 0.5 * (vals[m - 1] + vals[m]);
}

std::size_t count_warning(const std::vector<ResultRecord>& records,
                          const std::function<bool(const ResultRecord&)>& keep,
                          const std::string& token) {
  std::size_t count = 0;
  for (const auto& r : records) {
    if (!keep(r)) continue;
    std::size_t pos = 0;
    while (pos <= r.warnings.size()) {
      std::size_t end = r.warnings.find(';', pos);
      if (end == std::string::npos) end = r.warnings.size();
      if (r.warnings.compare(pos, end - pos, token) == 0) {
        ++count;
        break;
      }
      if (end == r.warnings.size()) break;
      pos = end + 1;
    }
  }
  return count;
}

RateFit fit_rate_slope(const std::vector<std::pair<double, double>>& n_median) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [n, med] : n_median)
    if (n > 0 && med > 0 && std::isfinite(n) && std::isfinite(med))
      pts.emplace_back(std::log(n), std::log(med));
  if (pts.size() < 3)
    throw std::invalid_argument(
        "fit_rate_slope: need at least three usable points, have " +
        std::to_string(pts.size()));

  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0)
    throw std::invalid_argument("fit_rate_slope: sample sizes all equal");

  RateFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  out.used = static_cast<int>(pts.size());
  return out;
}

PcaCheck check_pca_equivalence(const Eigen::MatrixXd& x, int r) {
  PcaCheck out;
  ScoreField field = ScoreField::plugin_gaussian(x);
  LatentBasis fo = first_order_fit(x, x, r, field);
  LatentBasis pc = pca_fit(x, r);
  out.distance = subspace_dist(fo.matrix, pc.matrix);

  const int p = static_cast<int>(x.cols());
  if (r < p) {
    Eigen::MatrixXd sigma =
        x.transpose() * x / static_cast<double>(x.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (sigma + sigma.transpose()));
    const auto& ev = es.eigenvalues();  // ascending
    const double top = ev(p - 1);
    const double gap = ev(p - r) - ev(p - r - 1);
    out.degenerate = gap <= 1e-10 * std::max(top, 1e-300);
  }
  return out;
}

namespace {

double median_of(std::vector<double> vals) {
  std::sort(vals.begin(), vals.end());
  const std::size_t m = vals.size() / 2;
  return vals.size() % 2 ? vals[m] : 0.5 * (vals[m - 1] + vals[m]);
}

Eigen::MatrixXd normal_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

void validate_semi_benchmark(const SemiBenchmarkConfig& c) {
  if (c.p < 1 || c.r < 1 || c.r > c.p)
    throw std::invalid_argument("semi benchmark: need 1 <= r <= p");
  if (c.q < 1) throw std::invalid_argument("semi benchmark: q must be positive");
  if (c.n_test < 1 || c.n_train < 2 || c.n_labeled < 2)
    throw std::invalid_argument(
        "semi benchmark: blocks too small (test >= 1, train >= 2, "
        "labeled >= 2)");
  if (c.reps < 1) throw std::invalid_argument("semi benchmark: reps < 1");
  if (!(c.noise_x > 0))
    throw std::invalid_argument("semi benchmark: noise_x must be positive");
  if (c.sigma_eps < 0)
    throw std::invalid_argument("semi benchmark: bad sigma_eps");
  for (const auto* v : {&c.factor_scale, &c.label_scale})
    if (v->size() != 0 && v->size() != c.r)
      throw std::invalid_argument(
          "semi benchmark: scale vectors must have length r");
}

}  // namespace

SemiBenchmarkResult run_semi_benchmark(const SemiBenchmarkConfig& config) {
  validate_semi_benchmark(config);
  const int p = config.p, r = config.r, q = config.q;
  const int n = config.n_test + config.n_train + config.n_labeled;

  Eigen::VectorXd factor = config.factor_scale;
  if (factor.size() == 0) {
    factor.resize(r);
    for (int k = 0; k < r; ++k) factor(k) = std::max(0.5 - 0.1 * k, 0.1);
  }
  Eigen::VectorXd label = config.label_scale;
  if (label.size() == 0) {
    // Equalize the label variance contributed by each latent coordinate;
    // factor(k)^2 + noise_x^2 is that coordinate's variance under the model.
    label.resize(r);
    for (int k = 0; k < r; ++k)
      label(k) =
          1.0 / std::sqrt(factor(k) * factor(k) + config.noise_x * config.noise_x);
  }

  std::vector<double> pmse_semi, pmse_lab, pmse_uns;
  std::vector<double> dist_semi, dist_lab, dist_uns;
  for (int rep = 0; rep < config.reps; ++rep) {
    Rng rng(derive_seed(config.master_seed, "semi-benchmark", rep));
    Eigen::MatrixXd b = generate_basis(p, r, 0.0, 1.0, rng);
    Eigen::MatrixXd a = normal_matrix(q, r, rng);
    for (int k = 0; k < r; ++k) a.col(k) *= label(k);
    Eigen::MatrixXd u = normal_matrix(n, r, rng);
    Eigen::MatrixXd x = u * factor.asDiagonal() * b.transpose() +
                        config.noise_x * normal_matrix(n, p, rng);
    Eigen::MatrixXd y =
        (x * b) * a.transpose() + config.sigma_eps * normal_matrix(n, q, rng);

    SplitProtocol protocol;
    protocol.n_test = config.n_test;
    protocol.n_train = config.n_train;
    protocol.n_labeled = config.n_labeled;
    SplitIndices split = split_semi_supervised(n, protocol, rng);
    SemiSupervisedData semi = semi_data_from_split(x, y, split);
    Eigen::MatrixXd x_test = take_rows(x, split.test);
    Eigen::MatrixXd y_test = take_rows(y, split.test);
    Eigen::MatrixXd x_train = take_rows(x, split.train);
    Eigen::MatrixXd y_train = take_rows(y, split.train);

    ScoreField field_pool = ScoreField::plugin_gaussian(semi.x_all);
    ScoreField field_lab = ScoreField::plugin_gaussian(semi.x_labeled);

    auto score = [&](const LatentBasis& fit, std::vector<double>& pmse_out,
                     std::vector<double>& dist_out) {
      LinearDecoder dec = fit_linear_decoder(x_train * fit.matrix, y_train);
      pmse_out.push_back(pmse(decode(dec, x_test * fit.matrix), y_test));
      dist_out.push_back(subspace_dist(fit.matrix, b));
    };
    score(first_order_fit_semi(semi, r, field_pool), pmse_semi, dist_semi);
    score(first_order_fit(semi.x_labeled, semi.y_labeled, r, field_lab),
          pmse_lab, dist_lab);
    score(first_order_fit(semi.x_all, semi.x_all, r, field_pool), pmse_uns,
          dist_uns);
  }

  SemiBenchmarkResult out;
  out.semi = {median_of(pmse_semi), median_of(dist_semi)};
  out.labeled_only = {median_of(pmse_lab), median_of(dist_lab)};
  out.unsupervised = {median_of(pmse_uns), median_of(dist_uns)};
  return out;
}

ExperimentConfig desk_preset() {
  ExperimentConfig c;
  c.methods = {"first-order", "rrr"};
  c.dist_kinds = {DistKind::Gaussian};
  c.mechanisms = {1};
  c.score_modes = {"known"};
  c.p_grid = {10};
  c.n_grid = {250, 500, 1000, 2000, 4000};
  c.q = 10;
  c.r = 2;
  c.reps = 30;
  c.sigma_eps = 0.5;
  c.master_seed = 1729;
  return c;
}

ExperimentConfig paper_default_preset() {
  ExperimentConfig c;
  c.methods = {"first-order", "second-order", "pca", "rrr"};
  c.dist_kinds = {DistKind::Gaussian, DistKind::Hyperbolic, DistKind::StudentT};
  c.mechanisms = {1, 2, 3};
  c.score_modes = {"known", "plug-in"};
  c.p_grid = {30, 50, 80, 100};
  c.n_grid = {300, 500, 1000, 3000, 5000, 7000, 9000};
  c.q = 20;
  c.r = 3;
  c.reps = 100;
  c.sigma_eps = 0.5;
  c.master_seed = 1729;
  return c;
}

}  // namespace steinspan
