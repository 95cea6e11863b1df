#include "steinspan/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace steinspan {

namespace {

// How many pooled standard errors the leading absolute eigenvalue of the
// second-order moment must clear before the fit is accepted. The floor
// measures per-entry scale by the median absolute deviation rather than the
// standard deviation, so it stays calibrated for responses whose moment is
// zero in expectation without being inflated by the extreme higher moments
// that strongly curved responses produce. On the simulation grids the
// statistic concentrates below 5 for purely linear responses and above 25
// for curved ones, at every sample size of interest.
constexpr double kNearZeroSigmas = 6.0;

// At most this many per-sample matrices are retained for the floor estimate;
// a deterministic stride keeps the subsample reproducible and the memory
// bounded at large n.
constexpr int kFloorSubsampleCap = 512;

// Relative tolerance under which adjacent spectrum values are considered
// tied and their invariant subspace treated as a single cluster.
constexpr double kTieRelTol = 1e-9;

void check_xy(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
              const ScoreField& field, const char* who) {
  if (x.rows() == 0)
    throw std::invalid_argument(std::string(who) + ": no samples");
  if (x.rows() != y.rows())
    throw std::invalid_argument(std::string(who) + ": x has " +
                                std::to_string(x.rows()) + " rows but y has " +
                                std::to_string(y.rows()));
  if (x.cols() != field.dim())
    throw std::invalid_argument(std::string(who) + ": x has " +
                                std::to_string(x.cols()) +
                                " columns but the score field expects " +
                                std::to_string(field.dim()));
}

void check_rank(int r, int upper, const char* who) {
  if (r < 1 || r > upper)
    throw std::invalid_argument(std::string(who) + ": requested rank " +
                                std::to_string(r) + " outside [1, " +
                                std::to_string(upper) + "]");
}

double median_destructive(std::vector<double>& v) {
  const size_t k = v.size();
  std::nth_element(v.begin(), v.begin() + k / 2, v.end());
  const double hi = v[k / 2];
  if (k % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + k / 2);
  return 0.5 * (lo + hi);
}

// Frobenius-pooled standard error of an empirical mean of n matrices, with
// the per-entry scale taken as 1.4826 times the median absolute deviation
// over the retained subsample.
double robust_floor(const std::vector<Eigen::MatrixXd>& subsample, int n) {
  const int k = static_cast<int>(subsample.size());
  const int p = static_cast<int>(subsample.front().rows());
  std::vector<double> vals(k);
  double pooled = 0.0;
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      for (int t = 0; t < k; ++t) vals[t] = subsample[t](a, b);
      const double med = median_destructive(vals);
      for (int t = 0; t < k; ++t) vals[t] = std::abs(subsample[t](a, b) - med);
      const double scale = 1.4826 * median_destructive(vals);
      pooled += scale * scale / n;
    }
  }
  return std::sqrt(pooled);
}

// Partition indices [0, vals.size()) of a descending nonnegative sequence
// into maximal runs whose consecutive gaps stay below tol.
std::vector<std::pair<int, int>> cluster_by_gap(const Eigen::VectorXd& vals,
                                                double tol) {
  std::vector<std::pair<int, int>> out;
  int lo = 0;
  for (int i = 1; i < vals.size(); ++i) {
    if (vals(i - 1) - vals(i) > tol) {
      out.emplace_back(lo, i);
      lo = i;
    }
  }
  out.emplace_back(lo, static_cast<int>(vals.size()));
  return out;
}

// Within a tied cluster the frame is arbitrary up to rotation. Canonicalize
// it by diagonalizing the dispersion's quadratic form restricted to the
// cluster, ordering directions by descending form value. This both pins the
// frame deterministically and makes the fit agree with the principal
// components of the dispersion whenever the whole spectrum ties (the
// self-response case).
void rediagonalize_cluster(Eigen::MatrixXd& u, int lo, int hi,
                           const Eigen::MatrixXd& dispersion) {
  const int width = hi - lo;
  if (width < 2) return;
  Eigen::MatrixXd uc = u.middleCols(lo, width);
  Eigen::MatrixXd g = uc.transpose() * dispersion * uc;
  g = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  // Ascending eigenvalues; reverse to descending.
  Eigen::MatrixXd w = es.eigenvectors().rowwise().reverse();
  u.middleCols(lo, width) = uc * w;
}

// Common spectral-selection step of the first-order fits: SVD, tie-cluster
// canonicalization, truncation to r columns.
LatentBasis first_order_from_moment(const Eigen::MatrixXd& m, int r,
                                    const ScoreField& field,
                                    std::vector<std::string> warnings) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  Eigen::VectorXd sv = svd.singularValues();
  Eigen::MatrixXd u = svd.matrixU();
  check_rank(r, static_cast<int>(u.cols()), "first_order_fit");

  const double tol = kTieRelTol * sv(0) + 1e-300;
  bool straddles = false;
  for (const auto& [lo, hi] : cluster_by_gap(sv, tol)) {
    if (lo >= r) break;
    rediagonalize_cluster(u, lo, hi, field.dispersion());
    if (hi > r) straddles = true;
  }
  if (straddles) warnings.emplace_back("degenerate-spectrum");

  LatentBasis out;
  out.matrix = u.leftCols(r);
  out.rank = r;
  out.warnings = std::move(warnings);
  orient_columns(out.matrix);
  return out;
}

std::vector<std::string> field_warnings(const ScoreField& field) {
  std::vector<std::string> w;
  if (field.is_plugin() && field.dispersion_rank() < field.dim())
    w.emplace_back("rank-deficient");
  return w;
}

// Eigen-selection step of the second-order fits: symmetrize, order by
// absolute eigenvalue, truncate to r columns.
LatentBasis second_order_from_moment(Eigen::MatrixXd m, int r,
                                     std::vector<std::string> warnings) {
  const int p = static_cast<int>(m.rows());
  check_rank(r, p, "second_order_fit");
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double fa = std::abs(ev(a)), fb = std::abs(ev(b));
    if (fa != fb) return fa > fb;
    if (ev(a) != ev(b)) return ev(a) > ev(b);
    return a < b;
  });

  if (r < p) {
    double top = std::abs(ev(order[0]));
    if (std::abs(ev(order[r - 1])) - std::abs(ev(order[r])) <=
        kTieRelTol * top)
      warnings.emplace_back("degenerate-spectrum");
  }

  LatentBasis out;
  out.matrix.resize(p, r);
  for (int j = 0; j < r; ++j) out.matrix.col(j) = es.eigenvectors().col(order[j]);
  out.rank = r;
  out.warnings = std::move(warnings);
  orient_columns(out.matrix);
  return out;
}

}  // namespace

void orient_columns(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index at = 0;
    m.col(j).cwiseAbs().maxCoeff(&at);
    if (m(at, j) < 0.0) m.col(j) = -m.col(j);
  }
}

LatentBasis first_order_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                            int r, const ScoreField& field) {
  check_xy(x, y, field, "first_order_fit");
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd m = field.score1_all(x).transpose() * y / n;
  return first_order_from_moment(m, r, field, field_warnings(field));
}

LatentBasis second_order_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             int r, const ScoreField& field) {
  check_xy(x, y, field, "second_order_fit");
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  check_rank(r, p, "second_order_fit");

  Eigen::VectorXd ybar = y.rowwise().mean();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  const int cap = std::min(n, kFloorSubsampleCap);
  std::vector<Eigen::MatrixXd> subsample;
  subsample.reserve(cap);
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd z = ybar(i) * field.score2(x.row(i).transpose());
    m += z;
    if (static_cast<long long>(i + 1) * cap / n >
        static_cast<long long>(i) * cap / n)
      subsample.push_back(std::move(z));
  }
  m /= n;

  // With a single sample there is no scale information, so the floor test is
  // skipped rather than guessed.
  if (n >= 2) {
    const double floor_val = kNearZeroSigmas * robust_floor(subsample, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> probe(
        0.5 * (m + m.transpose()));
    const double top = probe.eigenvalues().cwiseAbs().maxCoeff();
    if (top <= floor_val)
      throw NearZeroMatrixError(
          "near-zero-matrix: leading absolute eigenvalue " +
          std::to_string(top) + " does not clear the noise floor " +
          std::to_string(floor_val) +
          "; the responses carry no usable curvature");
  }

  std::vector<std::string> warnings = field_warnings(field);
  if (n <= p * p) warnings.emplace_back("n<=p^2");
  return second_order_from_moment(std::move(m), r, std::move(warnings));
}

LatentBasis first_order_fit_semi(const SemiSupervisedData& data, int r,
                                 const ScoreField& field) {
  check_xy(data.x_labeled, data.y_labeled, field, "first_order_fit_semi");
  if (data.x_all.rows() == 0 || data.x_all.cols() != field.dim())
    throw std::invalid_argument("first_order_fit_semi: bad covariate pool");
  const int p = field.dim();
  const double n = static_cast<double>(data.x_labeled.rows());
  const double big_n = static_cast<double>(data.x_all.rows());
  Eigen::MatrixXd labeled =
      field.score1_all(data.x_labeled).transpose() * data.y_labeled / n;
  Eigen::MatrixXd pool =
      field.score1_all(data.x_all).transpose() * data.x_all / big_n;
  Eigen::MatrixXd m(p, labeled.cols() + pool.cols());
  m << labeled, pool;
  return first_order_from_moment(m, r, field, field_warnings(field));
}

LatentBasis second_order_fit_semi(const SemiSupervisedData& data, int r,
                                  const ScoreField& field) {
  check_xy(data.x_labeled, data.y_labeled, field, "second_order_fit_semi");
  if (data.x_all.rows() == 0 || data.x_all.cols() != field.dim())
    throw std::invalid_argument("second_order_fit_semi: bad covariate pool");
  const int p = field.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);

  Eigen::VectorXd ybar = data.y_labeled.rowwise().mean();
  for (Eigen::Index i = 0; i < data.x_labeled.rows(); ++i)
    m += ybar(i) * field.score2(data.x_labeled.row(i).transpose());
  m /= static_cast<double>(data.x_labeled.rows());

  Eigen::MatrixXd pool = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xbar = data.x_all.rowwise().mean();
  for (Eigen::Index i = 0; i < data.x_all.rows(); ++i)
    pool += xbar(i) * field.score2(data.x_all.row(i).transpose());
  m += pool / static_cast<double>(data.x_all.rows());

  return second_order_from_moment(std::move(m), r, field_warnings(field));
}

LatentBasis pca_fit(const Eigen::MatrixXd& x, int r) {
  if (x.rows() == 0) throw std::invalid_argument("pca_fit: no samples");
  const int p = static_cast<int>(x.cols());
  check_rank(r, p, "pca_fit");
  Eigen::MatrixXd sigma =
      x.transpose() * x / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (sigma + sigma.transpose()));
  LatentBasis out;
  out.matrix = es.eigenvectors().rightCols(r).rowwise().reverse();
  out.rank = r;
  orient_columns(out.matrix);
  return out;
}

LatentBasis rrr_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                    int r) {
  if (x.rows() == 0) throw std::invalid_argument("rrr_fit: no samples");
  if (x.rows() != y.rows())
    throw std::invalid_argument("rrr_fit: x has " + std::to_string(x.rows()) +
                                " rows but y has " + std::to_string(y.rows()));
  const int p = static_cast<int>(x.cols());
  const int q = static_cast<int>(y.cols());
  check_rank(r, std::min(p, q), "rrr_fit");

  Eigen::MatrixXd c_ols =
      x.completeOrthogonalDecomposition().solve(y);  // min-norm, p x q
  Eigen::MatrixXd fitted = x * c_ols;
  // Right singular frame of the fitted values via the (small) q x q Gram.
  Eigen::MatrixXd gram = fitted.transpose() * fitted;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (gram + gram.transpose()));
  Eigen::MatrixXd vr = es.eigenvectors().rightCols(r).rowwise().reverse();
  Eigen::MatrixXd c = c_ols * vr * vr.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeThinU);
  LatentBasis out;
  out.matrix = svd.matrixU().leftCols(r);
  out.rank = r;
  orient_columns(out.matrix);
  return out;
}

LinearDecoder fit_linear_decoder(const Eigen::MatrixXd& z,
                                 const Eigen::MatrixXd& y) {
  if (z.rows() == 0 || z.rows() != y.rows())
    throw std::invalid_argument("fit_linear_decoder: shape mismatch");
  Eigen::RowVectorXd zbar = z.colwise().mean();
  Eigen::RowVectorXd ybar = y.colwise().mean();
  Eigen::MatrixXd zc = z.rowwise() - zbar;
  Eigen::MatrixXd yc = y.rowwise() - ybar;
  LinearDecoder dec;
  dec.w = zc.completeOrthogonalDecomposition().solve(yc);
  dec.intercept = (ybar - zbar * dec.w).transpose();
  return dec;
}

Eigen::MatrixXd decode(const LinearDecoder& dec, const Eigen::MatrixXd& z) {
  if (z.cols() != dec.w.rows())
    throw std::invalid_argument("decode: latent dimension mismatch");
  return (z * dec.w).rowwise() + dec.intercept.transpose();
}

}  // namespace steinspan
