#include "steinspan/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace steinspan {

double elementary_link(int id, double x) {
  switch (id) {
    case 1: return std::sin(x - 1.0);
    case 2: return std::cosh(x - 1.0);
    case 3: return std::cos(x - 1.0);
    case 4: return std::tanh(x - 1.0);
    case 5: return std::atan(x - 1.0);
    case 6: return std::pow(x - 1.0, 3);
    case 7: return std::pow(x - 1.0, 5);
    case 8: return 1.0 / (1.0 + std::exp(-x));
    case 9: return std::sqrt((x - 1.0) * (x - 1.0) + 1.0);
    case 10: return std::exp(x);
    default:
      throw std::invalid_argument("elementary_link: id " + std::to_string(id) +
                                  " outside [1, 10]");
  }
}

std::vector<int> default_link_pool() {
  return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
}

LinkSpec make_links(int mechanism, int q, int r, Rng& rng,
                    const std::vector<int>& pool) {
  if (q < 1 || r < 1)
    throw std::invalid_argument("make_links: q, r must be positive");
  if (pool.empty())
    throw std::invalid_argument("make_links: empty link pool");
  for (int id : pool)
    if (id < 1 || id > 10)
      throw std::invalid_argument("make_links: pool id " + std::to_string(id) +
                                  " outside [1, 10]");
  if (mechanism != 1 && q % 2 != 0)
    throw std::invalid_argument("make_links: q must be even under mechanism " +
                                std::to_string(mechanism));
  if (mechanism == 3 && q < 4)
    throw std::invalid_argument(
        "make_links: mechanism 3 needs q >= 4 for a distinct pair");
  if (mechanism < 1 || mechanism > 3)
    throw std::invalid_argument("make_links: mechanism " +
                                std::to_string(mechanism) +
                                " outside {1, 2, 3}");

  LinkSpec out;
  out.mechanism = mechanism;
  out.coeff.resize(q, r);
  out.funcs.assign(q, {});

  // Coefficients are drawn first, row by row, then any random link ids; this
  // order is pinned so a stored seed reproduces the wiring exactly.
  if (mechanism == 1) {
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < r; ++j) out.coeff(i, j) = 0.5 * rng.normal();
    return out;
  }
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < r; ++j) out.coeff(i, j) = std::abs(rng.normal()) + 3.0;

  // One-based slot i in [q/2] mapped onto the pool, cycling when the pool is
  // shorter than q/2.
  const int half = q / 2;
  auto slot = [&pool](int i) {
    return pool[static_cast<std::size_t>((i - 1) % static_cast<int>(pool.size()))];
  };

  for (int j = 1; j <= half; ++j) out.funcs[j - 1] = {slot(j)};
  if (mechanism == 2) {
    for (int j = 1; j <= half; ++j)
      out.funcs[half + j - 1] = {slot(j), slot(j % half + 1)};
  } else {
    for (int j = 1; j <= half; ++j) {
      int j1 = 1 + static_cast<int>(rng.uniform_int(half));
      int j2 = 1 + static_cast<int>(rng.uniform_int(half - 1));
      if (j2 >= j1) ++j2;
      out.funcs[half + j - 1] = {slot(j1), slot(j2)};
    }
  }
  return out;
}

Eigen::MatrixXd apply_links(const LinkSpec& links, const Eigen::MatrixXd& z) {
  const int q = static_cast<int>(links.coeff.rows());
  if (z.cols() != links.coeff.cols())
    throw std::invalid_argument("apply_links: z has " +
                                std::to_string(z.cols()) +
                                " indices but the wiring expects " +
                                std::to_string(links.coeff.cols()));
  if (static_cast<int>(links.funcs.size()) != q)
    throw std::invalid_argument("apply_links: wiring is inconsistent");
  const Eigen::Index n = z.rows();
  const Eigen::Index r = z.cols();
  Eigen::MatrixXd y(n, q);
  Eigen::MatrixXd w(n, r);
  for (int j = 0; j < q; ++j) {
    const auto& ids = links.funcs[j];
    if (ids.empty()) {
      y.col(j) = z * links.coeff.row(j).transpose();
      continue;
    }
    w.setZero();
    for (int id : ids)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < r; ++k)
          w(i, k) += elementary_link(id, z(i, k));
    y.col(j) = w * links.coeff.row(j).transpose();
  }
  return y;
}

Eigen::MatrixXd generate_basis(int p, int r, double mu0, double sigma0,
                               Rng& rng) {
  if (p < 1 || r < 1 || r > p)
    throw std::invalid_argument("generate_basis: need 1 <= r <= p");
  Eigen::MatrixXd g(p, r);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < r; ++j) g(i, j) = mu0 + sigma0 * rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, r);
  Eigen::MatrixXd rmat =
      qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (int j = 0; j < r; ++j)
    if (rmat(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

SyntheticDataset generate_dataset(const SimulationSpec& spec) {
  if (spec.n < 1)
    throw std::invalid_argument("generate_dataset: n must be positive");
  if (spec.sigma_eps < 0.0)
    throw std::invalid_argument("generate_dataset: sigma_eps must be >= 0");
  if (spec.r < 1 || spec.r > spec.p)
    throw std::invalid_argument("generate_dataset: need 1 <= r <= p");

  SyntheticDataset out;
  out.spec = spec;
  if (out.spec.chi <= 0.0) out.spec.chi = 2.0 * spec.p + 1.0;
  if (out.spec.psi <= 0.0) out.spec.psi = static_cast<double>(spec.p);

  Rng rng(spec.seed);
  out.sigma = generate_dispersion(spec.p, spec.recipe, rng);
  out.b = generate_basis(spec.p, spec.r, spec.mu0, spec.sigma0, rng);
  out.links = make_links(spec.mechanism, spec.q, spec.r, rng, spec.link_pool);

  DistributionSpec dist;
  dist.kind = spec.kind;
  dist.p = spec.p;
  dist.sigma = out.sigma;
  dist.nu = spec.nu;
  dist.chi = out.spec.chi;
  dist.psi = out.spec.psi;
  out.x = sample(dist, spec.n, rng);
  out.z = out.x * out.b;
  out.y = apply_links(out.links, out.z);
  for (Eigen::Index i = 0; i < out.y.rows(); ++i)
    for (Eigen::Index j = 0; j < out.y.cols(); ++j)
      out.y(i, j) += spec.sigma_eps * rng.normal();
  return out;
}

SplitIndices split_semi_supervised(int n, const SplitProtocol& protocol,
                                   Rng& rng) {
  if (protocol.n_test < 0 || protocol.n_train < 0 || protocol.n_labeled < 0)
    throw std::invalid_argument("split_semi_supervised: negative block size");
  const long long want = static_cast<long long>(protocol.n_test) +
                         protocol.n_train + protocol.n_labeled;
  if (n < 0 || want > n)
    throw std::invalid_argument("split_semi_supervised: requested " +
                                std::to_string(want) + " rows from " +
                                std::to_string(n));

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const int k = static_cast<int>(want);
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.uniform_int(n - i));
    std::swap(idx[i], idx[j]);
  }

  SplitIndices out;
  auto grab = [&](int lo, int count) {
    std::vector<int> block(idx.begin() + lo, idx.begin() + lo + count);
    std::sort(block.begin(), block.end());
    return block;
  };
  out.test = grab(0, protocol.n_test);
  out.train = grab(protocol.n_test, protocol.n_train);
  out.labeled = grab(protocol.n_test + protocol.n_train, protocol.n_labeled);
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m,
                          const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows())
      throw std::out_of_range("take_rows: index " + std::to_string(rows[i]) +
                              " outside [0, " + std::to_string(m.rows()) +
                              ")");
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

SemiSupervisedData semi_data_from_split(const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& y,
                                        const SplitIndices& split) {
  if (x.rows() != y.rows())
    throw std::invalid_argument("semi_data_from_split: x and y disagree on n");
  std::vector<int> pool;
  pool.reserve(split.train.size() + split.labeled.size());
  pool.insert(pool.end(), split.train.begin(), split.train.end());
  pool.insert(pool.end(), split.labeled.begin(), split.labeled.end());
  std::sort(pool.begin(), pool.end());

  SemiSupervisedData out;
  out.x_labeled = take_rows(x, split.labeled);
  out.y_labeled = take_rows(y, split.labeled);
  out.x_all = take_rows(x, pool);
  return out;
}

}  // namespace steinspan
