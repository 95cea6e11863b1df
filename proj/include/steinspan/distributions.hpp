#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "steinspan/rng.hpp"

namespace steinspan {

enum class DistKind { Gaussian, StudentT, Hyperbolic };

const char* dist_kind_name(DistKind kind);
DistKind dist_kind_from_name(const std::string& name);

// Sampling design for the feature vector x. The Student-t family uses the
// convention in which sigma is the covariance matrix itself for every
// nu > 2 (the classical scale matrix would be sigma * (nu-2)/nu). The
// hyperbolic family is the normal variance-mixture with a generalized
// inverse Gaussian mixing weight, index (p+1)/2 and location zero.
struct DistributionSpec {
  DistKind kind = DistKind::Gaussian;
  int p = 0;
  Eigen::VectorXd mu;     // empty means zero
  Eigen::MatrixXd sigma;  // p x p, symmetric positive definite
  double nu = 10.0;       // StudentT, requires nu > 2
  double chi = 0.0;       // Hyperbolic, requires chi > 0
  double psi = 0.0;       // Hyperbolic, requires psi > 0
};

// Throws std::invalid_argument on malformed parameters. Positive
// definiteness is checked via Cholesky; on failure the error names the
// smallest eigenvalue.
void validate_spec(const DistributionSpec& spec);

// Haar-distributed orthogonal matrix: QR of an iid standard normal matrix
// with the R-diagonal sign correction.
Eigen::MatrixXd haar_orthogonal(int p, Rng& rng);

// Random dispersion: Q diag(|z_i| + b) Q^T with z_i ~ N(0, sigma^2) and Q
// Haar orthogonal. Always symmetric positive definite for b > 0.
struct DispersionRecipe {
  double b = 1.0;
  double sigma = 1.0;
};

Eigen::MatrixXd generate_dispersion(int p, const DispersionRecipe& recipe,
                                    Rng& rng);

// One draw from the generalized inverse Gaussian law with density
// proportional to w^(lambda-1) exp(-(chi/w + psi*w)/2), chi > 0, psi > 0.
// Ratio-of-uniforms / constant-hat rejection after Hormann & Leydold (2014);
// negative lambda is handled through the reciprocal identity.
double sample_gig(double lambda, double chi, double psi, Rng& rng);

// n x p sample matrix, one observation per row. Deterministic given the
// generator state; the per-row draw order is part of the file format
// contract for provenance replay and must not change.
Eigen::MatrixXd sample(const DistributionSpec& spec, int n, Rng& rng);
Eigen::MatrixXd sample(const DistributionSpec& spec, int n,
                       std::uint64_t seed);

// log of the Bessel K function, ln K_lambda(z) for z > 0, evaluated by
// quadrature of exp(-z cosh t) cosh(lambda t) in shifted log space.
double log_bessel_k(double lambda, double z);

double log_density(const DistributionSpec& spec, const Eigen::VectorXd& x);

}  // namespace steinspan
