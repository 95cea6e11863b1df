// Test-side reference implementations, kept deliberately independent of the
// library code paths they are used to check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace oracles {

// Adaptive Simpson on a finite interval.
inline double adaptive_simpson_(const std::function<double(double)>& f,
                                double a, double b, double fa, double fm,
                                double fb, double whole, double tol,
                                int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson_(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12) {
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_(f, a, b, fa, fm, fb, whole, tol, 48);
}

// Integral of f over (0, inf) via the substitution w = t/(1-t).
inline double integrate_half_line(const std::function<double(double)>& f,
                                  double tol = 1e-12) {
  auto g = [&](double t) {
    double w = t / (1.0 - t);
    double jac = 1.0 / ((1.0 - t) * (1.0 - t));
    double v = f(w) * jac;
    return std::isfinite(v) ? v : 0.0;
  };
  return integrate(g, 1e-14, 1.0 - 1e-14, tol);
}

// k-th moment of the generalized inverse Gaussian law by direct quadrature
// of the unnormalized density; no Bessel functions involved.
inline double gig_moment(double lambda, double chi, double psi, double k) {
  auto dens = [&](double w) {
    return std::exp((lambda - 1.0) * std::log(w) -
                    0.5 * (chi / w + psi * w));
  };
  double z = integrate_half_line(dens);
  double m = integrate_half_line(
      [&](double w) { return std::pow(w, k) * dens(w); });
  return m / z;
}

// Exhaustive subspace-distance oracles: minimize ||t1 - t2 * V||_F over the
// orthogonal group, by sign enumeration (r = 1) or by a dense sweep over
// rotations and reflections (r = 2).
inline double procrustes_brute_r1(const Eigen::MatrixXd& t1,
                                  const Eigen::MatrixXd& t2) {
  double best = std::numeric_limits<double>::infinity();
  for (double s : {-1.0, 1.0}) best = std::min(best, (t1 - s * t2).norm());
  return best;
}

inline double procrustes_brute_r2(const Eigen::MatrixXd& t1,
                                  const Eigen::MatrixXd& t2, int steps = 3600) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < steps; ++i) {
    double th = 2.0 * M_PI * i / steps;
    double c = std::cos(th), s = std::sin(th);
    Eigen::Matrix2d rot, ref;
    rot << c, -s, s, c;
    ref << c, s, s, -c;
    best = std::min(best, (t1 - t2 * rot).norm());
    best = std::min(best, (t1 - t2 * ref).norm());
  }
  return best;
}

}  // namespace oracles
