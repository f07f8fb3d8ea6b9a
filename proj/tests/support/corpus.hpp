#pragma once

// Random binary specialization matrices for property tests.

#include "capspace/complexity_core.hpp"
#include "capspace/trade_ingest.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace capspace::testing {

/// Pruned, connected random 0/1 matrix; density drawn per matrix.
inline trade::SpecializationMatrix random_connected(std::mt19937_64& rng, int nc, int np) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double dens = 0.25 + 0.5 * u(rng);
    Matrix m(nc, np);
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < np; ++j) m(i, j) = u(rng) < dens ? 1.0 : 0.0;
    auto s = trade::from_binary(m);
    if (!s.is_pruned()) continue;
    if (complexity::bipartite_components(s) != 1) continue;
    return s;
  }
}

/// Descending real eigenvalues and matching eigenvectors of a matrix with real spectrum.
struct DenseEig {
  Vector values;
  Matrix vectors;
};

inline DenseEig dense_eig(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a);
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::sort(idx.begin(), idx.end(), [&](auto x, auto y) {
    return es.eigenvalues()(x).real() > es.eigenvalues()(y).real();
  });
  DenseEig out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = es.eigenvalues()(idx[static_cast<std::size_t>(k)]).real();
    out.vectors.col(k) = es.eigenvectors().col(idx[static_cast<std::size_t>(k)]).real().normalized();
  }
  return out;
}

/// Random 6x6 corpus member whose second eigenvalue is simple for both sides.
inline trade::SpecializationMatrix oracle_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (;;) {
    auto s = random_connected(rng, 6, 6);
    auto ec = dense_eig(complexity::m_tilde(s));
    auto ep = dense_eig(complexity::m_hat(s));
    if (ec.values(1) - ec.values(2) > 1e-3 && ep.values(1) - ep.values(2) > 1e-3) return s;
  }
}

/// Largest |a - b| after flipping b to best match a.
inline double sign_aligned_diff(const Vector& a, const Vector& b) {
  return std::min((a - b).cwiseAbs().maxCoeff(), (a + b).cwiseAbs().maxCoeff());
}

}  // namespace capspace::testing
