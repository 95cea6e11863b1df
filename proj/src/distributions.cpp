#include "steinspan/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace steinspan {

const char* dist_kind_name(DistKind kind) {
  switch (kind) {
    case DistKind::Gaussian: return "gaussian";
    case DistKind::StudentT: return "student-t";
    case DistKind::Hyperbolic: return "hyperbolic";
  }
  return "unknown";
}

DistKind dist_kind_from_name(const std::string& name) {
  if (name == "gaussian") return DistKind::Gaussian;
  if (name == "student-t") return DistKind::StudentT;
  if (name == "hyperbolic") return DistKind::Hyperbolic;
  throw std::invalid_argument("unknown distribution kind: " + name);
}

namespace {

// Cholesky factor of a validated dispersion; on failure the message names
// the smallest eigenvalue so the caller can see how far from SPD it was.
Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma,
                                                      Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff();
    throw std::invalid_argument(
        "sigma is not positive definite (smallest eigenvalue " +
        std::to_string(lo) + ")");
  }
  return llt.matrixL();
}

}  // namespace

void validate_spec(const DistributionSpec& spec) {
  if (spec.p < 1) throw std::invalid_argument("p must be at least 1");
  if (spec.mu.size() != 0 && spec.mu.size() != spec.p)
    throw std::invalid_argument("mu has wrong length");
  if (spec.sigma.rows() != spec.p || spec.sigma.cols() != spec.p)
    throw std::invalid_argument("sigma must be p x p");
  double scale = std::max(1.0, spec.sigma.cwiseAbs().maxCoeff());
  if ((spec.sigma - spec.sigma.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * scale)
    throw std::invalid_argument("sigma must be symmetric");
  cholesky_or_throw(spec.sigma);
  if (spec.kind == DistKind::StudentT && !(spec.nu > 2.0))
    throw std::invalid_argument(
        "student-t requires nu > 2 under the covariance convention");
  if (spec.kind == DistKind::Hyperbolic) {
    if (!(spec.chi > 0.0) || !std::isfinite(spec.chi))
      throw std::invalid_argument("hyperbolic requires chi > 0");
    if (!(spec.psi > 0.0) || !std::isfinite(spec.psi))
      throw std::invalid_argument("hyperbolic requires psi > 0");
  }
}

Eigen::MatrixXd haar_orthogonal(int p, Rng& rng) {
  if (p < 1) throw std::invalid_argument("p must be at least 1");
  Eigen::MatrixXd g(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR();
  // Fixing the signs of Q's columns by the diagonal of R makes the factor
  // unique and the resulting law exactly Haar.
  for (int j = 0; j < p; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Eigen::MatrixXd generate_dispersion(int p, const DispersionRecipe& recipe,
                                    Rng& rng) {
  if (p < 1) throw std::invalid_argument("p must be at least 1");
  if (!(recipe.b > 0.0))
    throw std::invalid_argument("dispersion offset b must be positive");
  if (recipe.sigma < 0.0)
    throw std::invalid_argument("dispersion sigma must be nonnegative");
  Eigen::MatrixXd q = haar_orthogonal(p, rng);
  Eigen::VectorXd lam(p);
  for (int i = 0; i < p; ++i)
    lam(i) = std::abs(recipe.sigma * rng.normal()) + recipe.b;
  Eigen::MatrixXd sigma = q * lam.asDiagonal() * q.transpose();
  return (sigma + sigma.transpose()) / 2.0;
}

namespace {

// Two-parameter generalized inverse Gaussian helpers: draw from the density
// proportional to x^(lam-1) exp(-(omega/2)(x + 1/x)). The three rejection
// regimes follow Hormann & Leydold (2014); see also Dagpunar (1989) for the
// shifted ratio-of-uniforms variant.

double gig_mode(double lam, double omega) {
  if (lam >= 1.0)
    return (std::sqrt((lam - 1.0) * (lam - 1.0) + omega * omega) +
            (lam - 1.0)) /
           omega;
  return omega / (std::sqrt((1.0 - lam) * (1.0 - lam) + omega * omega) +
                  (1.0 - lam));
}

// Ratio-of-uniforms without shift; valid when the transformed density is
// T-concave (lam >= 1 - 2.25 omega^2 or omega > 0.2).
double gig_rou_noshift(double lam, double omega, Rng& rng) {
  const double t = 0.5 * (lam - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lam, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);
  const double ym =
      ((lam + 1.0) + std::sqrt((lam + 1.0) * (lam + 1.0) + omega * omega)) /
      omega;
  const double um =
      std::exp(0.5 * (lam + 1.0) * std::log(ym) - s * (ym + 1.0 / ym) - nc);
  for (;;) {
    const double u = um * rng.uniform();
    const double v = rng.uniform();
    const double x = u / v;
    if (std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc) return x;
  }
}

// Ratio-of-uniforms shifted to the mode; bounding rectangle from the roots
// of a cubic solved by the trigonometric form of Cardano's rule. Preferred
// for lam > 2 or omega > 3 where the unshifted rectangle gets inefficient.
double gig_rou_shift(double lam, double omega, Rng& rng) {
  const double t = 0.5 * (lam - 1.0);
  const double s = 0.25 * omega;
  const double xm = gig_mode(lam, omega);
  const double nc = t * std::log(xm) - s * (xm + 1.0 / xm);

  const double a = -(2.0 * (lam + 1.0) / omega + xm);
  const double b = 2.0 * (lam - 1.0) * xm / omega - 1.0;
  const double c = xm;

  const double pp = b - a * a / 3.0;
  const double qq = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
  const double fi = std::acos(-qq / (2.0 * std::sqrt(-(pp * pp * pp) / 27.0)));
  const double fak = 2.0 * std::sqrt(-pp / 3.0);
  const double y1 = fak * std::cos(fi / 3.0) - a / 3.0;
  const double y2 = fak * std::cos(fi / 3.0 + 4.0 / 3.0 * M_PI) - a / 3.0;

  const double uplus =
      (y1 - xm) * std::exp(t * std::log(y1) - s * (y1 + 1.0 / y1) - nc);
  const double uminus =
      (y2 - xm) * std::exp(t * std::log(y2) - s * (y2 + 1.0 / y2) - nc);

  for (;;) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    const double x = u / v + xm;
    if (x > 0.0 &&
        std::log(v) <= t * std::log(x) - s * (x + 1.0 / x) - nc)
      return x;
  }
}

// Piecewise constant/power/exponential hat for the non-T-concave corner
// 0 <= lam < 1, 0 < omega < 1.
double gig_three_piece(double lam, double omega, Rng& rng) {
  const double xm = gig_mode(lam, omega);
  const double x0 = omega / (1.0 - lam);

  const double k0 =
      std::exp((lam - 1.0) * std::log(xm) - 0.5 * omega * (xm + 1.0 / xm));
  double a0 = k0 * x0;

  double k1 = 0.0, a1 = 0.0, k2 = 0.0, a2 = 0.0;
  if (x0 >= 2.0 / omega) {
    k2 = std::pow(x0, lam - 1.0);
    a2 = k2 * 2.0 * std::exp(-omega * x0 / 2.0) / omega;
  } else {
    k1 = std::exp(-omega);
    a1 = (lam == 0.0)
             ? k1 * std::log(2.0 / (omega * omega))
             : k1 / lam *
                   (std::pow(2.0 / omega, lam) - std::pow(x0, lam));
    k2 = std::pow(2.0 / omega, lam - 1.0);
    a2 = k2 * 2.0 * std::exp(-1.0) / omega;
  }
  const double atot = a0 + a1 + a2;

  for (;;) {
    double v = atot * rng.uniform();
    double x, hx;
    if (v <= a0) {
      x = x0 * v / a0;
      hx = k0;
    } else {
      v -= a0;
      if (v <= a1) {
        if (lam == 0.0) {
          x = omega * std::exp(std::exp(omega) * v);
        } else {
          x = std::pow(std::pow(x0, lam) + lam / k1 * v, 1.0 / lam);
        }
        hx = k1 * std::pow(x, lam - 1.0);
      } else {
        v -= a1;
        const double edge = std::max(x0, 2.0 / omega);
        x = -2.0 / omega *
            std::log(std::exp(-omega / 2.0 * edge) - omega / (2.0 * k2) * v);
        hx = k2 * std::exp(-omega / 2.0 * x);
      }
    }
    const double u = hx * rng.uniform();
    if (std::log(u) <= (lam - 1.0) * std::log(x) -
                           omega / 2.0 * (x + 1.0 / x))
      return x;
  }
}

}  // namespace

double sample_gig(double lambda, double chi, double psi, Rng& rng) {
  if (!std::isfinite(lambda) || !std::isfinite(chi) || !std::isfinite(psi) ||
      !(chi > 0.0) || !(psi > 0.0))
    throw std::invalid_argument(
        "sample_gig requires finite lambda and chi > 0, psi > 0");
  const bool invert = lambda < 0.0;
  const double lam = std::abs(lambda);
  const double alpha = std::sqrt(chi / psi);
  const double omega = std::sqrt(chi * psi);

  double x;
  if (lam > 2.0 || omega > 3.0)
    x = gig_rou_shift(lam, omega, rng);
  else if (lam >= 1.0 - 2.25 * omega * omega || omega > 0.2)
    x = gig_rou_noshift(lam, omega, rng);
  else
    x = gig_three_piece(lam, omega, rng);

  return invert ? alpha / x : alpha * x;
}

Eigen::MatrixXd sample(const DistributionSpec& spec, int n, Rng& rng) {
  validate_spec(spec);
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  const int p = spec.p;
  const Eigen::MatrixXd chol = cholesky_or_throw(spec.sigma);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd z(p);

  // Per-row draw order (normals first, then the mixing scalar) is part of
  // the reproducibility contract; provenance replay depends on it.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) z(j) = rng.normal();
    double scale = 1.0;
    switch (spec.kind) {
      case DistKind::Gaussian:
        break;
      case DistKind::StudentT: {
        double g = rng.chi_squared(spec.nu);
        scale = std::sqrt((spec.nu - 2.0) / g);
        break;
      }
      case DistKind::Hyperbolic: {
        double w =
            sample_gig(0.5 * (p + 1.0), spec.chi, spec.psi, rng);
        scale = std::sqrt(w);
        break;
      }
    }
    x.row(i) = (scale * (chol * z)).transpose();
    if (spec.mu.size() != 0) x.row(i) += spec.mu.transpose();
  }
  return x;
}

Eigen::MatrixXd sample(const DistributionSpec& spec, int n,
                       std::uint64_t seed) {
  Rng rng(seed);
  return sample(spec, n, rng);
}

double log_bessel_k(double lambda, double z) {
  if (!(z > 0.0) || !std::isfinite(z) || !std::isfinite(lambda))
    throw std::invalid_argument("log_bessel_k requires finite lambda, z > 0");
  const double lam = std::abs(lambda);

  // Exponent of the integrand of K_lam(z) e^z = int_0^inf
  // exp(-z(cosh t - 1)) cosh(lam t) dt, kept in log space throughout.
  auto expo = [&](double t) {
    double u = lam * t;
    double log_cosh =
        u > 0.0 ? u + std::log1p(std::exp(-2.0 * u)) - M_LN2 : 0.0;
    double ct = std::cosh(t);
    double damp = z * (ct - 1.0);
    if (!std::isfinite(damp)) return -std::numeric_limits<double>::infinity();
    return -damp + log_cosh;
  };

  // Expand the right endpoint until the integrand has fallen 80 e-folds
  // below the largest value seen.
  double peak = 0.0;  // expo(0) == 0
  double hi = 1.0;
  for (;;) {
    double e = expo(hi);
    peak = std::max(peak, e);
    if (e < peak - 80.0 || hi >= 700.0) break;
    hi *= 2.0;
  }

  // Composite Simpson refined until the log of the integral settles.
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int npanels = 256; npanels <= (1 << 20); npanels *= 2) {
    const double h = hi / npanels;
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> es(npanels + 1);
    for (int i = 0; i <= npanels; ++i) {
      es[i] = expo(h * i);
      m = std::max(m, es[i]);
    }
    double acc = 0.0;
    for (int i = 0; i <= npanels; ++i) {
      double w = (i == 0 || i == npanels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * std::exp(es[i] - m);
    }
    double log_i = m + std::log(acc * h / 3.0);
    if (std::isfinite(prev) && std::abs(log_i - prev) < 1e-13)
      return -z + log_i;
    prev = log_i;
  }
  return -z + prev;
}

double log_density(const DistributionSpec& spec, const Eigen::VectorXd& x) {
  validate_spec(spec);
  if (x.size() != spec.p)
    throw std::invalid_argument("x has wrong length");
  const int p = spec.p;
  const Eigen::MatrixXd chol = cholesky_or_throw(spec.sigma);
  double log_det = 0.0;
  for (int i = 0; i < p; ++i) log_det += 2.0 * std::log(chol(i, i));

  Eigen::VectorXd d = x;
  if (spec.mu.size() != 0) d -= spec.mu;
  Eigen::VectorXd half = chol.triangularView<Eigen::Lower>().solve(d);
  const double quad = half.squaredNorm();

  switch (spec.kind) {
    case DistKind::Gaussian:
      return -0.5 * p * std::log(2.0 * M_PI) - 0.5 * log_det - 0.5 * quad;
    case DistKind::StudentT: {
      const double nu = spec.nu;
      return std::lgamma(0.5 * (nu + p)) - std::lgamma(0.5 * nu) +
             0.5 * nu * std::log(nu - 2.0) - 0.5 * p * std::log(M_PI) -
             0.5 * log_det - 0.5 * (nu + p) * std::log(nu - 2.0 + quad);
    }
    case DistKind::Hyperbolic: {
      // Normal variance mixture with GIG(lam, chi, psi) weights and
      // lam = (p+1)/2; the mixing integral collapses to a K_{1/2} factor.
      const double lam = 0.5 * (p + 1.0);
      const double chi = spec.chi, psi = spec.psi;
      const double eta = std::sqrt(psi * (chi + quad));
      return -0.5 * p * std::log(2.0 * M_PI) - 0.5 * log_det +
             0.5 * lam * (std::log(psi) - std::log(chi)) -
             log_bessel_k(lam, std::sqrt(chi * psi)) +
             0.25 * (std::log(chi + quad) - std::log(psi)) +
             0.5 * (std::log(M_PI) - M_LN2 - std::log(eta)) - eta;
    }
  }
  throw std::logic_error("unreachable distribution kind");
}

}  // namespace steinspan
