#include "capspace/complexity_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace capspace::complexity {

namespace {

void require_pruned(const SpecializationMatrix& s) {
  if (!s.is_pruned())
    throw ValidationError("specialization matrix has empty rows or columns; prune it first");
}

double pearson_raw(const Vector& a, const Vector& b) {
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
  return den > 0.0 ? da.dot(db) / den : 0.0;
}

struct SecondEigenpair {
  Vector vector;  // unit norm, symmetric-form eigenvector
  double value = 0.0;
  double next_value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Block power iteration with Rayleigh-Ritz on a symmetric PSD operator whose
// top eigenvector `top` (unit norm) is known and deflated away.
SecondEigenpair deflated_subspace_iteration(const std::function<Matrix(const Matrix&)>& apply,
                                            const Vector& top, const EigenOptions& opt) {
  const Eigen::Index n = top.size();
  const Eigen::Index b = std::max<Eigen::Index>(1, std::min<Eigen::Index>(opt.block, n - 1));
  auto deflate = [&](Matrix& x) { x -= top * (top.transpose() * x); };
  auto orthonormalize = [&](const Matrix& x) {
    Eigen::HouseholderQR<Matrix> qr(x);
    return Matrix(qr.householderQ() * Matrix::Identity(n, b));
  };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  Matrix q(n, b);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = gauss(rng);
  deflate(q);
  q = orthonormalize(q);
  deflate(q);

  SecondEigenpair out;
  const Eigen::Index watch = std::min<Eigen::Index>(2, b);
  for (int it = 1; it <= opt.max_iter; ++it) {
    Matrix z = apply(q);
    deflate(z);
    Matrix h = q.transpose() * z;
    h = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    // Eigen sorts ascending; reverse to descending.
    Matrix y = es.eigenvectors().rowwise().reverse();
    Vector theta = es.eigenvalues().reverse();
    Matrix x = q * y;
    Matrix ax = z * y;

    double worst = 0.0;
    for (Eigen::Index k = 0; k < watch; ++k)
      worst = std::max(worst, (ax.col(k) - theta(k) * x.col(k)).norm());
    const double r0 = (ax.col(0) - theta(0) * x.col(0)).norm();

    out.vector = x.col(0).normalized();
    out.value = theta(0);
    out.next_value = b > 1 ? theta(1) : std::numeric_limits<double>::quiet_NaN();
    out.residual = r0;
    out.iterations = it;
    if (worst <= opt.tol || (b == n - 1)) {
      // b == n-1 spans the whole deflated space, so Rayleigh-Ritz is exact.
      out.converged = true;
      return out;
    }
    deflate(ax);
    q = orthonormalize(ax);
    deflate(q);
  }
  out.converged = out.residual <= opt.tol;
  return out;
}

}  // namespace

Matrix m_tilde(const SpecializationMatrix& s) {
  require_pruned(s);
  const Vector dinv = s.diversity.cast<double>().cwiseInverse();
  const Vector uinv = s.ubiquity.cast<double>().cwiseInverse();
  return dinv.asDiagonal() * (s.m * uinv.asDiagonal() * s.m.transpose());
}

Matrix m_hat(const SpecializationMatrix& s) {
  require_pruned(s);
  const Vector dinv = s.diversity.cast<double>().cwiseInverse();
  const Vector uinv = s.ubiquity.cast<double>().cwiseInverse();
  return uinv.asDiagonal() * (s.m.transpose() * dinv.asDiagonal() * s.m);
}

ReflectionState method_of_reflections(const SpecializationMatrix& s, int n_iter) {
  if (n_iter < 0) throw ValidationError("n_iter must be >= 0");
  ReflectionState st;
  st.k_c = s.diversity.cast<double>();
  st.k_p = s.ubiquity.cast<double>();
  if (n_iter == 0) return st;
  require_pruned(s);
  const Vector dinv = s.diversity.cast<double>().cwiseInverse();
  const Vector uinv = s.ubiquity.cast<double>().cwiseInverse();
  for (int n = 1; n <= n_iter; ++n) {
    Vector kc = dinv.asDiagonal() * (s.m * st.k_p);
    Vector kp = uinv.asDiagonal() * (s.m.transpose() * st.k_c);
    st.k_c = std::move(kc);
    st.k_p = std::move(kp);
    st.iteration = n;
  }
  return st;
}

int bipartite_components(const SpecializationMatrix& s) {
  const auto nc = s.m.rows();
  const auto np = s.m.cols();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(nc + np));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<Eigen::Index(Eigen::Index)> find = [&](Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (Eigen::Index c = 0; c < nc; ++c)
    for (Eigen::Index p = 0; p < np; ++p)
      if (s.m(c, p) != 0.0) parent[static_cast<std::size_t>(find(c))] = find(nc + p);
  int count = 0;
  for (Eigen::Index v = 0; v < nc + np; ++v)
    if (find(v) == v) ++count;
  return count;
}

Vector zscore(const Vector& x) {
  const double mean = x.mean();
  const Vector d = x.array() - mean;
  const double sd = std::sqrt(d.squaredNorm() / static_cast<double>(x.size()));
  if (!(sd > 0.0)) return Vector::Zero(x.size());
  return d / sd;
}

ComplexityResult eci_pci(const SpecializationMatrix& s, const EigenOptions& opt) {
  require_pruned(s);
  if (s.n_countries() < 2 || s.n_products() < 2)
    throw ValidationError("ECI/PCI need at least 2 countries and 2 products");
  if (bipartite_components(s) > 1)
    throw ValidationError("country-product graph is disconnected; compute per component");

  const Vector div = s.diversity.cast<double>();
  const Vector ubq = s.ubiquity.cast<double>();
  const Vector d_isqrt = div.cwiseSqrt().cwiseInverse();
  const Vector u_isqrt = ubq.cwiseSqrt().cwiseInverse();
  const Vector uinv = ubq.cwiseInverse();
  const Vector dinv = div.cwiseInverse();
  const Matrix& m = s.m;

  ComplexityResult res;

  // Countries: D^-1/2 M U^-1 M^T D^-1/2
  auto apply_c = [&](const Matrix& x) -> Matrix {
    Matrix t = m.transpose() * (d_isqrt.asDiagonal() * x);
    t = uinv.asDiagonal() * t;
    return d_isqrt.asDiagonal() * (m * t);
  };
  const Vector top_c = div.cwiseSqrt().normalized();
  auto ec = deflated_subspace_iteration(apply_c, top_c, opt);

  // Products: U^-1/2 M^T D^-1 M U^-1/2
  auto apply_p = [&](const Matrix& x) -> Matrix {
    Matrix t = m * (u_isqrt.asDiagonal() * x);
    t = dinv.asDiagonal() * t;
    return u_isqrt.asDiagonal() * (m.transpose() * t);
  };
  const Vector top_p = ubq.cwiseSqrt().normalized();
  EigenOptions opt_p = opt;
  opt_p.seed = mix_seed(opt.seed);
  auto ep = deflated_subspace_iteration(apply_p, top_p, opt_p);

  res.second_eigenvalue_c = ec.value;
  res.third_eigenvalue_c = ec.next_value;
  res.second_eigenvalue_p = ep.value;
  res.residual_c = ec.residual;
  res.residual_p = ep.residual;
  res.iterations_c = ec.iterations;
  res.iterations_p = ep.iterations;
  res.converged = ec.converged && ep.converged;
  if (!res.converged) res.warnings.push_back("eigensolver did not reach tolerance");
  if (std::isfinite(ec.next_value) && std::abs(ec.value - ec.next_value) <= 1e-9) {
    res.degenerate = true;
    res.warnings.push_back("second eigenvalue is degenerate; ECI is not unique");
  }

  Vector v = (d_isqrt.asDiagonal() * ec.vector).normalized();
  double corr = pearson_raw(v, div);
  if (corr < 0.0 || (corr == 0.0 && v(0) < 0.0)) v = -v;
  res.eci_eigenvector = v;
  res.eci = zscore(v);

  Vector w = (u_isqrt.asDiagonal() * ep.vector).normalized();
  const Vector exporter_mean_eci = uinv.asDiagonal() * (m.transpose() * res.eci);
  double pcorr = pearson_raw(w, exporter_mean_eci);
  if (pcorr < 0.0 || (pcorr == 0.0 && w(0) < 0.0)) w = -w;
  res.pci_eigenvector = w;
  res.pci = zscore(w);
  return res;
}

}  // namespace capspace::complexity
