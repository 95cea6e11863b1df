#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "steinspan/distributions.hpp"
#include "steinspan/estimators.hpp"
#include "steinspan/rng.hpp"

namespace steinspan {

// The ten elementary link functions, addressed one-based:
//   1 sin(x-1)      2 cosh(x-1)    3 cos(x-1)     4 tanh(x-1)   5 atan(x-1)
//   6 (x-1)^3       7 (x-1)^5      8 logistic(x)  9 sqrt((x-1)^2+1)  10 e^x
double elementary_link(int id, double x);

// How the q responses are wired to the r latent indices z.
//
// Every response j combines its links element-wise over the latent
// coordinates and then projects with its coefficient row:
//   f_j(z) = sum over id in funcs[j] of  <coeff_j, m_id(z)>,
// where m_id acts entrywise on z. An empty funcs[j] means the response is
// linear, f_j(z) = <coeff_j, z>.
//
// mechanism 1: all responses linear; coefficients N(0, 0.5^2) entries.
// mechanism 2: fixed wiring over a pool of elementary ids cycled one-based.
//   The first q/2 responses get the single links g(1), ..., g(q/2); the
//   second half gets consecutive sums g(j) + g(j mod (q/2) + 1), wrapping the
//   last pair around to g(1). Coefficient entries are |N(0,1)| + 3.
// mechanism 3: same first half as mechanism 2; each second-half response
//   sums two links g(j1) + g(j2) with j1, j2 drawn uniformly without
//   replacement from [q/2]. Coefficients as in mechanism 2.
//
// Mechanisms 2 and 3 require an even q (and q >= 4 for mechanism 3 so that a
// distinct pair exists).
struct LinkSpec {
  int mechanism = 1;
  Eigen::MatrixXd coeff;                 // q x r index coefficients
  std::vector<std::vector<int>> funcs;   // per-response elementary link ids
};

std::vector<int> default_link_pool();    // {1, ..., 10}

LinkSpec make_links(int mechanism, int q, int r, Rng& rng,
                    const std::vector<int>& pool = default_link_pool());

// Applies the wiring to latent indices z (n x r), returning noiseless
// responses (n x q).
Eigen::MatrixXd apply_links(const LinkSpec& links, const Eigen::MatrixXd& z);

// Orthonormalizes a p x r matrix of mu0 + sigma0 * N(0,1) entries.
Eigen::MatrixXd generate_basis(int p, int r, double mu0, double sigma0,
                               Rng& rng);

// Full description of one synthetic draw. chi and psi apply to the
// hyperbolic family only; nonpositive values select the defaults 2p+1 and p.
struct SimulationSpec {
  DistKind kind = DistKind::Gaussian;
  int p = 10;
  int q = 10;
  int r = 2;
  int mechanism = 2;
  int n = 1000;
  double sigma_eps = 0.5;
  double nu = 10.0;
  double chi = -1.0;
  double psi = -1.0;
  double mu0 = 0.0;      // basis generator location
  double sigma0 = 1.0;   // basis generator scale
  DispersionRecipe recipe;
  std::vector<int> link_pool = default_link_pool();
  std::uint64_t seed = 1;
};

struct SyntheticDataset {
  SimulationSpec spec;   // with chi / psi defaults resolved
  Eigen::MatrixXd sigma; // dispersion actually used, p x p
  Eigen::MatrixXd b;     // true orthonormal basis, p x r
  LinkSpec links;
  Eigen::MatrixXd x;     // n x p covariates
  Eigen::MatrixXd z;     // n x r latent indices, x * b
  Eigen::MatrixXd y;     // n x q noisy responses
};

// Draws dispersion, basis, links, covariates and noise from a single seeded
// stream in that fixed order, so a spec reproduces its dataset bit for bit.
SyntheticDataset generate_dataset(const SimulationSpec& spec);

// Block sizes of the three-way evaluation split: a held-out test block, an
// unlabeled training block, and a labeled block.
struct SplitProtocol {
  int n_test = 0;
  int n_train = 0;
  int n_labeled = 0;
};

struct SplitIndices {
  std::vector<int> test;
  std::vector<int> train;
  std::vector<int> labeled;
};

// Draws three disjoint uniformly random index blocks of the requested sizes
// from [0, n). Each block comes back sorted.
SplitIndices split_semi_supervised(int n, const SplitProtocol& protocol,
                                   Rng& rng);

// Copies the selected rows of a matrix in the order given.
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m,
                          const std::vector<int>& rows);

// Packages the labeled pairs plus the train+labeled covariate pool (the test
// block stays unseen) for the semi-supervised fits.
SemiSupervisedData semi_data_from_split(const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& y,
                                        const SplitIndices& split);

}  // namespace steinspan
