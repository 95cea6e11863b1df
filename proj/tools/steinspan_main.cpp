// Command-line front end: binds JSON configuration files to the library.
//
// Subcommands: simulate (synthetic dataset to CSV), fit (single estimate),
// eval (metrics between stored frames/predictions), sweep (Monte Carlo grid),
// check (fast invariant battery). Exit codes: 0 success, 1 runtime or
// numeric failure, 2 configuration failure. Diagnostics go to stderr as
// single-line JSON objects; stdout carries data only. All file writes are
// atomic.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "steinspan/distributions.hpp"
#include "steinspan/estimators.hpp"
#include "steinspan/experiments.hpp"
#include "steinspan/io.hpp"
#include "steinspan/metrics.hpp"
#include "steinspan/rng.hpp"
#include "steinspan/scores.hpp"
#include "steinspan/simulation.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using namespace steinspan;

// Configuration problems exit with code 2; everything else that escapes a
// command handler exits with code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void diagnose(const std::string& level, const std::string& where,
              const std::string& message) {
  ordered_json d;
  d["level"] = level;
  d["where"] = where;
  d["message"] = message;
  std::fprintf(stderr, "%s\n", d.dump().c_str());
}

json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse failure in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return j;
}

// Every config object carries a closed key set; anything else is a typo or
// a schema drift and is rejected rather than silently ignored.
void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
}

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

int get_int(const json& obj, const std::string& key, int fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer())
    throw ConfigError("key \"" + key + "\" must be an integer");
  return v->get<int>();
}

double get_num(const json& obj, const std::string& key, double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError("key \"" + key + "\" must be a number");
  return v->get<double>();
}

bool get_bool(const json& obj, const std::string& key, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean())
    throw ConfigError("key \"" + key + "\" must be a boolean");
  return v->get<bool>();
}

std::string get_str(const json& obj, const std::string& key,
                    const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError("key \"" + key + "\" must be a string");
  return v->get<std::string>();
}

std::string get_str_required(const json& obj, const std::string& key) {
  if (!find(obj, key)) throw ConfigError("missing required key \"" + key + "\"");
  return get_str(obj, key, "");
}

std::uint64_t get_seed(const json& obj, const std::string& key,
                       std::uint64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer() || (v->is_number_integer() && v->get<long long>() < 0))
    throw ConfigError("key \"" + key + "\" must be a nonnegative integer");
  return v->get<std::uint64_t>();
}

std::vector<int> get_int_array(const json& obj, const std::string& key,
                               std::vector<int> fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_array()) throw ConfigError("key \"" + key + "\" must be an array");
  std::vector<int> out;
  for (const auto& e : *v) {
    if (!e.is_number_integer())
      throw ConfigError("key \"" + key + "\" must hold integers");
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<std::string> get_str_array(const json& obj, const std::string& key,
                                       std::vector<std::string> fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_array()) throw ConfigError("key \"" + key + "\" must be an array");
  std::vector<std::string> out;
  for (const auto& e : *v) {
    if (!e.is_string())
      throw ConfigError("key \"" + key + "\" must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

DistKind parse_dist(const std::string& name) {
  try {
    return dist_kind_from_name(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

DispersionRecipe get_recipe(const json& obj, DispersionRecipe fallback) {
  const json* v = find(obj, "dispersion");
  if (!v) return fallback;
  if (!v->is_object())
    throw ConfigError("key \"dispersion\" must be an object");
  require_keys(*v, "dispersion", {"b", "sigma"});
  DispersionRecipe recipe = fallback;
  recipe.b = get_num(*v, "b", recipe.b);
  recipe.sigma = get_num(*v, "sigma", recipe.sigma);
  return recipe;
}

std::string joined(const std::filesystem::path& dir, const std::string& name) {
  return (dir / name).string();
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty())
    throw ConfigError(where + " must be a nonempty array of arrays");
  const std::size_t cols = rows[0].is_array() ? rows[0].size() : 0;
  if (cols == 0) throw ConfigError(where + " must be a nonempty array of arrays");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols)
      throw ConfigError(where + " rows must all have the same length");
    for (std::size_t j = 0; j < cols; ++j) {
      if (!rows[i][j].is_number())
        throw ConfigError(where + " entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j].get<double>();
    }
  }
  return m;
}

void write_json_atomic(const std::string& path, const ordered_json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

Eigen::MatrixXd load_matrix(const std::string& path, const std::string& role) {
  try {
    return read_matrix_csv(path);
  } catch (const std::exception& e) {
    throw ConfigError(role + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// simulate

// Named presets expand to the first grid point of the corresponding sweep
// preset, so a single simulated dataset matches the sweep's smallest cell.
SimulationSpec preset_simulation(const std::string& name) {
  ExperimentConfig base;
  if (name == "desk")
    base = desk_preset();
  else if (name == "paper-default")
    base = paper_default_preset();
  else
    throw ConfigError("unknown preset \"" + name +
                      "\"; expected \"desk\" or \"paper-default\"");
  SimulationSpec spec;
  spec.kind = base.dist_kinds.front();
  spec.p = base.p_grid.front();
  spec.q = base.q;
  spec.r = base.r;
  spec.mechanism = base.mechanisms.front();
  spec.n = base.n_grid.front();
  spec.sigma_eps = base.sigma_eps;
  spec.nu = base.nu;
  spec.mu0 = base.mu0;
  spec.sigma0 = base.sigma0;
  spec.recipe = base.recipe;
  spec.link_pool = base.link_pool;
  return spec;
}

int cmd_simulate(const json& cfg, const std::filesystem::path& out,
                 std::optional<std::uint64_t> seed_override, bool verbose) {
  require_keys(cfg, "simulate config",
               {"preset", "distribution", "p", "q", "r", "mechanism", "n",
                "sigma_eps", "nu", "chi", "psi", "mu0", "sigma0", "dispersion",
                "link_pool", "seed"});
  const std::string preset = get_str(cfg, "preset", "");
  SimulationSpec spec =
      preset.empty() ? SimulationSpec{} : preset_simulation(preset);
  if (find(cfg, "distribution"))
    spec.kind = parse_dist(get_str(cfg, "distribution", ""));
  spec.p = get_int(cfg, "p", spec.p);
  spec.q = get_int(cfg, "q", spec.q);
  spec.r = get_int(cfg, "r", spec.r);
  spec.mechanism = get_int(cfg, "mechanism", spec.mechanism);
  spec.n = get_int(cfg, "n", spec.n);
  spec.sigma_eps = get_num(cfg, "sigma_eps", spec.sigma_eps);
  spec.nu = get_num(cfg, "nu", spec.nu);
  spec.chi = get_num(cfg, "chi", spec.chi);
  spec.psi = get_num(cfg, "psi", spec.psi);
  spec.mu0 = get_num(cfg, "mu0", spec.mu0);
  spec.sigma0 = get_num(cfg, "sigma0", spec.sigma0);
  spec.recipe = get_recipe(cfg, spec.recipe);
  spec.link_pool = get_int_array(cfg, "link_pool", spec.link_pool);
  spec.seed = get_seed(cfg, "seed", spec.seed);
  if (seed_override) spec.seed = *seed_override;

  if (spec.p < 1 || spec.q < 1 || spec.r < 1 || spec.n < 1)
    throw ConfigError("p, q, r and n must all be positive");
  if (spec.r > spec.p) throw ConfigError("r must not exceed p");
  if (spec.mechanism < 1 || spec.mechanism > 3)
    throw ConfigError("mechanism must be 1, 2 or 3");
  if (spec.mechanism != 1 && spec.q % 2 != 0)
    throw ConfigError("q must be even under link mechanisms 2 and 3");

  SyntheticDataset ds = generate_dataset(spec);

  write_matrix_csv(joined(out, "X.csv"), ds.x);
  write_matrix_csv(joined(out, "Y.csv"), ds.y);
  write_matrix_csv(joined(out, "B_true.csv"), ds.b);

  ordered_json prov;
  if (!preset.empty()) prov["preset"] = preset;
  prov["distribution"] = dist_kind_name(ds.spec.kind);
  prov["p"] = ds.spec.p;
  prov["q"] = ds.spec.q;
  prov["r"] = ds.spec.r;
  prov["mechanism"] = ds.spec.mechanism;
  prov["n"] = ds.spec.n;
  prov["sigma_eps"] = ds.spec.sigma_eps;
  if (ds.spec.kind == DistKind::StudentT) prov["nu"] = ds.spec.nu;
  if (ds.spec.kind == DistKind::Hyperbolic) {
    prov["chi"] = ds.spec.chi;
    prov["psi"] = ds.spec.psi;
  }
  prov["mu0"] = ds.spec.mu0;
  prov["sigma0"] = ds.spec.sigma0;
  prov["dispersion_recipe"] = {{"b", ds.spec.recipe.b},
                               {"sigma", ds.spec.recipe.sigma}};
  prov["link_pool"] = ds.spec.link_pool;
  prov["seed"] = ds.spec.seed;
  prov["sigma"] = matrix_to_json(ds.sigma);
  ordered_json links;
  links["mechanism"] = ds.links.mechanism;
  links["coeff"] = matrix_to_json(ds.links.coeff);
  links["funcs"] = ds.links.funcs;
  prov["links"] = std::move(links);
  write_json_atomic(joined(out, "provenance.json"), prov);

  if (verbose)
    diagnose("info", "simulate",
             "wrote X.csv, Y.csv, B_true.csv, provenance.json to " +
                 out.string());
  return 0;
}

// ---------------------------------------------------------------------------
// fit

// Builds the closed-form score field for score mode "known". Parameters come
// either from a provenance.json written by the simulate command or from an
// inline "distribution" object.
ScoreField known_field(const json& cfg, int p) {
  const json* prov_key = find(cfg, "provenance");
  const json* dist_key = find(cfg, "distribution");
  if ((prov_key != nullptr) == (dist_key != nullptr))
    throw ConfigError(
        "score \"known\" needs exactly one of \"provenance\" or "
        "\"distribution\"");
  DistributionSpec spec;
  spec.p = p;
  if (prov_key) {
    if (!prov_key->is_string())
      throw ConfigError("key \"provenance\" must be a path string");
    json prov = load_config(prov_key->get<std::string>());
    spec.kind = parse_dist(get_str(prov, "distribution", "gaussian"));
    spec.nu = get_num(prov, "nu", spec.nu);
    spec.chi = get_num(prov, "chi", 2.0 * p + 1.0);
    spec.psi = get_num(prov, "psi", static_cast<double>(p));
    const json* sig = find(prov, "sigma");
    if (!sig) throw ConfigError("provenance file has no \"sigma\" matrix");
    spec.sigma = matrix_from_json(*sig, "provenance sigma");
  } else {
    if (!dist_key->is_object())
      throw ConfigError("key \"distribution\" must be an object");
    require_keys(*dist_key, "distribution",
                 {"kind", "nu", "chi", "psi", "sigma_csv", "sigma_scale"});
    spec.kind = parse_dist(get_str_required(*dist_key, "kind"));
    spec.nu = get_num(*dist_key, "nu", spec.nu);
    spec.chi = get_num(*dist_key, "chi", 2.0 * p + 1.0);
    spec.psi = get_num(*dist_key, "psi", static_cast<double>(p));
    if (find(*dist_key, "sigma_csv") && find(*dist_key, "sigma_scale"))
      throw ConfigError(
          "distribution takes \"sigma_csv\" or \"sigma_scale\", not both");
    if (find(*dist_key, "sigma_csv"))
      spec.sigma = load_matrix(get_str(*dist_key, "sigma_csv", ""),
                               "distribution sigma_csv");
    else
      spec.sigma = get_num(*dist_key, "sigma_scale", 1.0) *
                   Eigen::MatrixXd::Identity(p, p);
  }
  if (spec.sigma.rows() != p || spec.sigma.cols() != p)
    throw ConfigError("dispersion must be " + std::to_string(p) + " x " +
                      std::to_string(p) + " to match the data");
  try {
    return ScoreField::closed_form(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

int cmd_fit(const json& cfg, const std::filesystem::path& out, bool verbose) {
  require_keys(cfg, "fit config",
               {"x_csv", "y_csv", "method", "r", "score", "provenance",
                "distribution"});
  const std::string method = get_str_required(cfg, "method");
  if (method != "first-order" && method != "second-order" && method != "pca" &&
      method != "rrr")
    throw ConfigError("method must be one of first-order, second-order, pca, "
                      "rrr; got \"" + method + "\"");
  const json* rkey = find(cfg, "r");
  if (!rkey) throw ConfigError("missing required key \"r\"");
  const int r = get_int(cfg, "r", 0);
  if (r < 1) throw ConfigError("r must be a positive integer");

  Eigen::MatrixXd x = load_matrix(get_str_required(cfg, "x_csv"), "x_csv");
  Eigen::MatrixXd y;
  if (method != "pca") {
    y = load_matrix(get_str_required(cfg, "y_csv"), "y_csv");
    if (y.rows() != x.rows())
      throw ConfigError("x_csv and y_csv row counts differ");
  } else if (find(cfg, "y_csv")) {
    throw ConfigError("method pca takes no y_csv");
  }

  const std::string score = get_str(cfg, "score", "plug-in");
  if (score != "plug-in" && score != "known")
    throw ConfigError("score must be \"plug-in\" or \"known\"");
  const bool uses_score = method == "first-order" || method == "second-order";
  if (!uses_score && (find(cfg, "provenance") || find(cfg, "distribution") ||
                      find(cfg, "score")))
    throw ConfigError("method " + method + " takes no score options");

  ordered_json report;
  report["method"] = method;
  if (uses_score) report["score"] = score;
  report["n"] = x.rows();
  report["p"] = x.cols();
  if (method != "pca") report["q"] = y.cols();
  report["r"] = r;

  LatentBasis basis;
  try {
    if (!uses_score) {
      basis = method == "pca" ? pca_fit(x, r) : rrr_fit(x, y, r);
    } else {
      ScoreField field = score == "known"
                             ? known_field(cfg, static_cast<int>(x.cols()))
                             : ScoreField::plugin_gaussian(x);
      basis = method == "first-order" ? first_order_fit(x, y, r, field)
                                      : second_order_fit(x, y, r, field);
    }
  } catch (const NearZeroMatrixError& e) {
    report["warnings"] = ordered_json::array({"near-zero-matrix"});
    report["message"] = e.what();
    report["outputs"] = ordered_json::array();
    write_json_atomic(joined(out, "fit-report.json"), report);
    if (verbose) diagnose("info", "fit", "near-zero moment matrix; no basis");
    return 0;
  }

  report["warnings"] = basis.warnings;
  report["outputs"] = ordered_json::array({"B_hat.csv"});
  write_matrix_csv(joined(out, "B_hat.csv"), basis.matrix);
  write_json_atomic(joined(out, "fit-report.json"), report);
  if (verbose)
    diagnose("info", "fit", "wrote B_hat.csv, fit-report.json to " +
                                out.string());
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const json& cfg, const std::filesystem::path& out, bool verbose) {
  require_keys(cfg, "eval config",
               {"b_hat_csv", "b_true_csv", "y_true_csv", "y_pred_csv",
                "ssim_range"});
  Eigen::MatrixXd b_hat =
      load_matrix(get_str_required(cfg, "b_hat_csv"), "b_hat_csv");
  Eigen::MatrixXd b_true =
      load_matrix(get_str_required(cfg, "b_true_csv"), "b_true_csv");

  ordered_json metrics;
  metrics["subspace_dist"] = subspace_dist(b_hat, b_true);

  const bool has_true = find(cfg, "y_true_csv") != nullptr;
  const bool has_pred = find(cfg, "y_pred_csv") != nullptr;
  if (has_true != has_pred)
    throw ConfigError("y_true_csv and y_pred_csv must be given together");
  if (has_true) {
    Eigen::MatrixXd y_true =
        load_matrix(get_str(cfg, "y_true_csv", ""), "y_true_csv");
    Eigen::MatrixXd y_pred =
        load_matrix(get_str(cfg, "y_pred_csv", ""), "y_pred_csv");
    metrics["pmse"] = pmse(y_true, y_pred);
    metrics["nrse"] = nrse(y_true, y_pred);
    if (find(cfg, "ssim_range")) {
      const double range = get_num(cfg, "ssim_range", 0.0);
      if (!(range > 0)) throw ConfigError("ssim_range must be positive");
      metrics["ssim"] = ssim(y_true, y_pred, range);
    }
  } else if (find(cfg, "ssim_range")) {
    throw ConfigError("ssim_range needs y_true_csv and y_pred_csv");
  }

  write_json_atomic(joined(out, "metrics.json"), metrics);
  if (verbose)
    diagnose("info", "eval", "wrote metrics.json to " + out.string());
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

ExperimentConfig preset_experiment(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper-default") return paper_default_preset();
  throw ConfigError("unknown preset \"" + name +
                    "\"; expected \"desk\" or \"paper-default\"");
}

std::vector<DistKind> get_dists(const json& cfg, std::vector<DistKind> fallback) {
  const json* v = find(cfg, "distributions");
  if (!v) return fallback;
  if (!v->is_array())
    throw ConfigError("key \"distributions\" must be an array");
  std::vector<DistKind> out;
  for (const auto& e : *v) {
    if (!e.is_string())
      throw ConfigError("key \"distributions\" must hold strings");
    out.push_back(parse_dist(e.get<std::string>()));
  }
  return out;
}

int cmd_sweep(const json& cfg, const std::filesystem::path& out,
              std::optional<std::uint64_t> seed_override, bool verbose) {
  require_keys(cfg, "sweep config",
               {"preset", "methods", "distributions", "mechanisms",
                "score_modes", "p_grid", "n_grid", "q", "r", "reps",
                "sigma_eps", "nu", "mu0", "sigma0", "dispersion", "link_pool",
                "labeled_fraction", "master_seed", "threads",
                "measure_timing"});
  const std::string preset = get_str(cfg, "preset", "");
  ExperimentConfig ec =
      preset.empty() ? ExperimentConfig{} : preset_experiment(preset);
  ec.methods = get_str_array(cfg, "methods", ec.methods);
  ec.dist_kinds = get_dists(cfg, ec.dist_kinds);
  ec.mechanisms = get_int_array(cfg, "mechanisms", ec.mechanisms);
  ec.score_modes = get_str_array(cfg, "score_modes", ec.score_modes);
  ec.p_grid = get_int_array(cfg, "p_grid", ec.p_grid);
  ec.n_grid = get_int_array(cfg, "n_grid", ec.n_grid);
  ec.q = get_int(cfg, "q", ec.q);
  ec.r = get_int(cfg, "r", ec.r);
  ec.reps = get_int(cfg, "reps", ec.reps);
  ec.sigma_eps = get_num(cfg, "sigma_eps", ec.sigma_eps);
  ec.nu = get_num(cfg, "nu", ec.nu);
  ec.mu0 = get_num(cfg, "mu0", ec.mu0);
  ec.sigma0 = get_num(cfg, "sigma0", ec.sigma0);
  ec.recipe = get_recipe(cfg, ec.recipe);
  ec.link_pool = get_int_array(cfg, "link_pool", ec.link_pool);
  ec.labeled_fraction = get_num(cfg, "labeled_fraction", ec.labeled_fraction);
  ec.master_seed = get_seed(cfg, "master_seed", ec.master_seed);
  ec.threads = get_int(cfg, "threads", ec.threads);
  ec.measure_timing = get_bool(cfg, "measure_timing", ec.measure_timing);
  if (seed_override) ec.master_seed = *seed_override;

  std::vector<ResultRecord> records = run_sweep(ec);
  write_text_atomic(joined(out, "results.csv"), results_to_csv(records));

  // Per-cell medians, one row per grid cell in enumeration order.
  std::string medians =
      "method,dist_kind,link_mech,score_mode,p,q,r,sigma_eps,n,"
      "median_distance,used,total\n";
  std::set<std::tuple<std::string, int, int, std::string, int, int>> seen;
  for (const auto& rec : records) {
    auto key = std::make_tuple(rec.method, static_cast<int>(rec.dist_kind),
                               rec.mechanism, rec.score_mode, rec.p, rec.n);
    if (!seen.insert(key).second) continue;
    auto in_cell = [&](const ResultRecord& s) {
      return s.method == rec.method && s.dist_kind == rec.dist_kind &&
             s.mechanism == rec.mechanism && s.score_mode == rec.score_mode &&
             s.p == rec.p && s.n == rec.n;
    };
    int used = 0, total = 0;
    for (const auto& s : records)
      if (in_cell(s)) {
        ++total;
        if (std::isfinite(s.distance)) ++used;
      }
    medians += rec.method;
    medians += ',';
    medians += dist_kind_name(rec.dist_kind);
    medians += ',' + std::to_string(rec.mechanism);
    medians += ',' + rec.score_mode;
    medians += ',' + std::to_string(rec.p);
    medians += ',' + std::to_string(rec.q);
    medians += ',' + std::to_string(rec.r);
    medians += ',' + format_double(rec.sigma_eps);
    medians += ',' + std::to_string(rec.n);
    medians += ',' + format_double(median_distance(records, in_cell));
    medians += ',' + std::to_string(used);
    medians += ',' + std::to_string(total);
    medians += '\n';
  }
  write_text_atomic(joined(out, "medians.csv"), medians);

  // One log-log rate fit per method x distribution, pooling the remaining
  // axes at each n.
  ordered_json slopes;
  for (const std::string& method : ec.methods) {
    ordered_json per_dist;
    for (DistKind kind : ec.dist_kinds) {
      std::vector<std::pair<double, double>> pts;
      for (int n : ec.n_grid) {
        double med = median_distance(records, [&](const ResultRecord& s) {
          return s.method == method && s.dist_kind == kind && s.n == n;
        });
        pts.emplace_back(static_cast<double>(n), med);
      }
      ordered_json entry;
      try {
        RateFit fit = fit_rate_slope(pts);
        entry["slope"] = fit.slope;
        entry["intercept"] = fit.intercept;
        entry["r_squared"] = fit.r_squared;
        entry["used"] = fit.used;
      } catch (const std::invalid_argument& e) {
        entry["note"] = e.what();
      }
      per_dist[dist_kind_name(kind)] = std::move(entry);
    }
    slopes[method] = std::move(per_dist);
  }
  write_json_atomic(joined(out, "slopes.json"), slopes);

  if (verbose)
    diagnose("info", "sweep",
             "wrote results.csv (" + std::to_string(records.size()) +
                 " rows), medians.csv, slopes.json to " + out.string());
  return 0;
}

// ---------------------------------------------------------------------------
// check

// Fast invariant battery: closed-form scores against finite differences, the
// alignment distance against a brute-force orthogonal search, and the
// self-response/principal-component equivalence. Runs in seconds; intended
// as a post-build smoke test.
int cmd_check(bool verbose) {
  int failures = 0;
  auto report = [&](const std::string& name, bool pass,
                    const std::string& detail) {
    std::printf("check %-18s %s  (%s)\n", name.c_str(),
                pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++failures;
  };

  {
    const int p = 4, points = 25;
    double worst1 = 0.0, worst2 = 0.0;
    for (DistKind kind :
         {DistKind::Gaussian, DistKind::StudentT, DistKind::Hyperbolic}) {
      DistributionSpec spec;
      spec.kind = kind;
      spec.p = p;
      Rng rng(derive_seed(2024, "check-score", static_cast<int>(kind)));
      spec.sigma = generate_dispersion(p, DispersionRecipe{}, rng);
      spec.nu = 10.0;
      spec.chi = 2.0 * p + 1.0;
      spec.psi = p;
      ScoreField field = ScoreField::closed_form(spec);
      Eigen::MatrixXd xs = sample(spec, points, rng);
      for (int i = 0; i < points; ++i) {
        Eigen::VectorXd x = xs.row(i).transpose();
        worst1 = std::max(worst1, (field.score1(x) - finite_diff_score1(spec, x))
                                      .cwiseAbs()
                                      .maxCoeff());
        worst2 = std::max(worst2, (field.score2(x) - finite_diff_score2(spec, x))
                                      .cwiseAbs()
                                      .maxCoeff());
      }
    }
    report("score-gradients", worst1 < 1e-5 && worst2 < 1e-4,
           "max dev " + format_double(worst1) + " / " + format_double(worst2));
  }

  {
    bool ok = true;
    double worst = 0.0;
    Rng rng(derive_seed(2024, "check-procrustes", 0));
    for (int trial = 0; trial < 10 && ok; ++trial) {
      Eigen::MatrixXd t1 = generate_basis(6, 1, 0.0, 1.0, rng);
      Eigen::MatrixXd t2 = generate_basis(6, 1, 0.0, 1.0, rng);
      const double d = subspace_dist(t1, t2);
      const double oracle = std::min((t1 - t2).norm(), (t1 + t2).norm());
      worst = std::max(worst, std::abs(d - oracle));
      ok = ok && std::abs(d - oracle) < 1e-3 && d <= oracle + 1e-12;
    }
    for (int trial = 0; trial < 10 && ok; ++trial) {
      Eigen::MatrixXd t1 = generate_basis(6, 2, 0.0, 1.0, rng);
      Eigen::MatrixXd t2 = generate_basis(6, 2, 0.0, 1.0, rng);
      const double d = subspace_dist(t1, t2);
      double oracle = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 1800; ++k) {
        const double a = 2.0 * M_PI * k / 1800.0;
        Eigen::Matrix2d rot, ref;
        rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
        ref << std::cos(a), std::sin(a), std::sin(a), -std::cos(a);
        oracle = std::min({oracle, (t1 - t2 * rot).norm(), (t1 - t2 * ref).norm()});
      }
      worst = std::max(worst, std::abs(d - oracle));
      ok = ok && std::abs(d - oracle) < 1e-3 && d <= oracle + 1e-12;
    }
    report("alignment-oracle", ok, "max dev " + format_double(worst));
  }

  {
    double worst = 0.0;
    for (int s = 0; s < 5; ++s) {
      DistributionSpec spec;
      spec.kind = DistKind::Gaussian;
      spec.p = 10;
      Rng rng(derive_seed(2024, "check-pca", s));
      spec.sigma = generate_dispersion(10, DispersionRecipe{}, rng);
      Eigen::MatrixXd x = sample(spec, 500, rng.next_u64());
      PcaCheck chk = check_pca_equivalence(x, 3);
      if (!chk.degenerate) worst = std::max(worst, chk.distance);
    }
    report("pca-equivalence", worst < 1e-8, "max dist " + format_double(worst));
  }

  if (verbose)
    diagnose("info", "check",
             failures == 0 ? "all checks passed"
                           : std::to_string(failures) + " check(s) failed");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-subspace estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed_flag = -1;
  bool verbose = false;

  auto add_common = [&](CLI::App* sub, bool with_config, bool with_seed) {
    if (with_config)
      sub->add_option("-c,--config", config_path, "JSON config file")
          ->required();
    sub->add_option("-o,--out", out_dir, "output directory");
    if (with_seed)
      sub->add_option("-s,--seed", seed_flag,
                      "override the config seed (nonnegative)");
    sub->add_flag("-v,--verbose", verbose, "info diagnostics on stderr");
  };

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(sim, true, true);
  CLI::App* fit = app.add_subcommand("fit", "estimate a latent basis");
  add_common(fit, true, false);
  CLI::App* eval = app.add_subcommand("eval", "metrics between stored results");
  add_common(eval, true, false);
  CLI::App* sweep = app.add_subcommand("sweep", "run a Monte Carlo grid");
  add_common(sweep, true, true);
  CLI::App* check = app.add_subcommand("check", "fast invariant battery");
  check->add_flag("-v,--verbose", verbose, "info diagnostics on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    diagnose("error", "cli", e.what());
    return 2;
  }

  const std::string where = app.get_subcommands().front()->get_name();
  try {
    std::optional<std::uint64_t> seed_override;
    if (seed_flag >= 0) seed_override = static_cast<std::uint64_t>(seed_flag);
    std::filesystem::path out(out_dir);
    if (where == "check") return cmd_check(verbose);
    json cfg = load_config(config_path);
    if (where == "simulate") return cmd_simulate(cfg, out, seed_override, verbose);
    if (where == "fit") return cmd_fit(cfg, out, verbose);
    if (where == "eval") return cmd_eval(cfg, out, verbose);
    return cmd_sweep(cfg, out, seed_override, verbose);
  } catch (const ConfigError& e) {
    diagnose("error", where, e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    diagnose("error", where, e.what());
    return 2;
  } catch (const std::exception& e) {
    diagnose("error", where, e.what());
    return 1;
  }
}
