#include "capspace/capability_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace capspace::model {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_normal_pdf(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double normal_cdf(double x, double mu, double sd) {
  return 0.5 * std::erfc(-(x - mu) / (sd * std::sqrt(2.0)));
}

struct EmRun {
  GmmFit fit;
  bool collapsed = false;
};

EmRun run_em(const std::vector<double>& xs, std::vector<double> w, std::vector<double> mu, std::vector<double> sd,
             const GmmOptions& opt) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto k = static_cast<Eigen::Index>(w.size());
  const Eigen::Map<const Eigen::ArrayXd> x(xs.data(), n);
  EmRun run;
  Eigen::ArrayXXd r(n, k);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto js = static_cast<std::size_t>(j);
      const double c = std::log(w[js]) - std::log(sd[js]) - kLogSqrt2Pi;
      r.col(j) = c - 0.5 * ((x - mu[js]) / sd[js]).square();
    }
    const Eigen::ArrayXd top = r.rowwise().maxCoeff();
    r.colwise() -= top;
    r = r.exp();
    const Eigen::ArrayXd s = r.rowwise().sum();
    r.colwise() /= s;
    const double ll = (top + s.log()).sum();
    run.fit.ll_trace.push_back(ll);
    run.fit.iterations = it;
    run.fit.log_likelihood = ll;
    if (it > 0 && (ll - prev) / static_cast<double>(n) < opt.tol) {
      run.fit.converged = true;
      break;
    }
    if (it >= opt.max_iter) break;
    prev = ll;

    for (Eigen::Index j = 0; j < k; ++j) {
      const auto js = static_cast<std::size_t>(j);
      const double nk = r.col(j).sum();
      if (!(nk > 0.0)) {
        run.collapsed = true;
        return run;
      }
      const double m = (r.col(j) * x).sum() / nk;
      const double v = (r.col(j) * (x - m).square()).sum() / nk;
      w[js] = nk / static_cast<double>(n);
      mu[js] = m;
      sd[js] = std::sqrt(v);
      if (!(sd[js] >= opt.min_sd)) {
        run.collapsed = true;
        return run;
      }
    }
  }
  run.fit.n = static_cast<int>(k);
  run.fit.weights = std::move(w);
  run.fit.means = std::move(mu);
  run.fit.sds = std::move(sd);
  return run;
}

// k-means++ seeding followed by a hard assignment to get starting moments.
void kmeanspp_init(const std::vector<double>& x, std::size_t k, std::mt19937_64& rng, std::vector<double>& w,
                   std::vector<double>& mu, std::vector<double>& sd) {
  const std::size_t n = x.size();
  std::vector<double> centers;
  centers.push_back(x[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n))]);
  std::vector<double> d2(n);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (x[i] - c) * (x[i] - c));
      d2[i] = best;
      total += best;
    }
    if (!(total > 0.0)) {
      centers.push_back(x[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n))]);
      continue;
    }
    double u = uniform01(rng) * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      u -= d2[i];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(x[pick]);
  }
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double overall_sd = std::sqrt(var / static_cast<double>(n));

  std::vector<double> cnt(k, 0.0), s1(k, 0.0), s2(k, 0.0);
  for (double v : x) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (std::abs(v - centers[j]) < std::abs(v - centers[best])) best = j;
    cnt[best] += 1;
    s1[best] += v;
    s2[best] += v * v;
  }
  w.assign(k, 0.0);
  mu.assign(k, 0.0);
  sd.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    if (cnt[j] == 0) {
      w[j] = 1.0 / static_cast<double>(n);
      mu[j] = centers[j];
      sd[j] = overall_sd;
      continue;
    }
    w[j] = cnt[j] / static_cast<double>(n);
    mu[j] = s1[j] / cnt[j];
    const double v = std::max(0.0, s2[j] / cnt[j] - mu[j] * mu[j]);
    sd[j] = std::max(std::sqrt(v), overall_sd / static_cast<double>(k));
  }
  const double ws = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x_ : w) x_ /= ws;
}

}  // namespace

// ---------------------------------------------------------------------------

double GmmFit::mean() const {
  double m = 0.0;
  for (int j = 0; j < n; ++j) m += weights[static_cast<std::size_t>(j)] * means[static_cast<std::size_t>(j)];
  return m;
}

double GmmFit::pdf(double x) const {
  double p = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) p += weights[j] * std::exp(log_normal_pdf(x, means[j], sds[j]));
  return p;
}

double GmmFit::cdf(double x) const {
  double p = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) p += weights[j] * normal_cdf(x, means[j], sds[j]);
  return p;
}

GmmFit fit_gmm(const std::vector<double>& values, int n, std::uint64_t seed, const GmmOptions& opt) {
  if (n < 1) throw ValidationError("GMM needs n >= 1");
  if (values.size() < 2 * static_cast<std::size_t>(n)) throw ValidationError("GMM needs at least 2n values");
  for (double v : values)
    if (!std::isfinite(v)) throw ValidationError("GMM input contains non-finite values");

  std::mt19937_64 rng(seed);
  GmmFit best;
  bool have = false;
  int good = 0, collapsed = 0;
  while (good < opt.restarts) {
    std::vector<double> w, mu, sd;
    kmeanspp_init(values, static_cast<std::size_t>(n), rng, w, mu, sd);
    auto run = run_em(values, w, mu, sd, opt);
    if (run.collapsed) {
      if (++collapsed > 5) throw NumericalError("GMM component collapsed (sd < 1e-6) after 5 restarts");
      continue;
    }
    ++good;
    if (!have || run.fit.log_likelihood > best.log_likelihood) {
      best = std::move(run.fit);
      have = true;
    }
  }
  // order components by mean so downstream block layouts are stable
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return best.means[a] < best.means[b]; });
  GmmFit out = best;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.weights[j] = best.weights[idx[j]];
    out.means[j] = best.means[idx[j]];
    out.sds[j] = best.sds[idx[j]];
  }
  const double k = 3.0 * n - 1.0;
  out.aic = 2.0 * k - 2.0 * out.log_likelihood;
  out.bic = k * std::log(static_cast<double>(values.size())) - 2.0 * out.log_likelihood;
  out.data_min = *std::min_element(values.begin(), values.end());
  out.data_max = *std::max_element(values.begin(), values.end());
  out.data_mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return out;
}

AicSelection select_n_by_aic(const std::vector<double>& values, int n_max, std::uint64_t seed,
                             const GmmOptions& opt) {
  if (n_max < 1) throw ValidationError("n_max must be >= 1");
  AicSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= n_max; ++n) {
    sel.fits.push_back(fit_gmm(values, n, derive_seed(seed, {static_cast<std::uint64_t>(n)}), opt));
    if (sel.fits.back().aic < best) {
      best = sel.fits.back().aic;
      sel.best_n = n;
    }
  }
  return sel;
}

space::KsResult gmm_ks_test(const GmmFit& fit, std::vector<double> values) {
  if (values.empty()) throw ValidationError("KS test needs data");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = fit.cdf(values[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, space::kolmogorov_survival(std::sqrt(n) * d)};
}

// ---------------------------------------------------------------------------

int BlockLayout::block_of(int capability) const {
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (capability >= blocks[b].begin && capability < blocks[b].end) return static_cast<int>(b);
  throw ValidationError("capability index out of range");
}

const std::array<const char*, 6>& BlockParams::names() {
  static const std::array<const char*, 6> n{"phi_p_b", "phi_p_w", "phi_p_c", "phi_c_b", "phi_c_w", "phi_c_p"};
  return n;
}

void validate(const BlockParams& p) {
  const auto a = p.to_array();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] > 0.0 && a[i] <= 1.0))
      throw ValidationError(std::string(BlockParams::names()[i]) + " must lie in (0, 1]");
  if (p.pb > p.pw) throw ValidationError("phi_p_b must not exceed phi_p_w");
  if (p.cb > p.cw) throw ValidationError("phi_c_b must not exceed phi_c_w");
}

BlockLayout make_layout(const GmmFit& gmm, double pci_mean, int block_size) {
  if (block_size < 1) throw ValidationError("block size must be >= 1");
  if (gmm.n < 1) throw ValidationError("empty mixture");
  std::vector<int> order(static_cast<std::size_t>(gmm.n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return gmm.means[static_cast<std::size_t>(a)] < gmm.means[static_cast<std::size_t>(b)];
  });
  BlockLayout layout;
  int next = 0;
  for (int comp : order) {
    Block b;
    b.component = comp;
    b.type = gmm.means[static_cast<std::size_t>(comp)] > pci_mean ? BlockType::Core : BlockType::Periphery;
    b.begin = next;
    b.end = next + block_size;
    next = b.end;
    (b.type == BlockType::Core ? layout.n_core : layout.n_periphery) += 1;
    layout.blocks.push_back(b);
  }
  layout.n_capabilities = next;
  return layout;
}

Matrix block_means(const BlockLayout& layout, const BlockParams& p) {
  const int na = layout.n_capabilities;
  Matrix mu(na, na);
  for (std::size_t bi = 0; bi < layout.blocks.size(); ++bi)
    for (std::size_t bj = 0; bj < layout.blocks.size(); ++bj) {
      const auto& r = layout.blocks[bi];
      const auto& c = layout.blocks[bj];
      const bool rp = r.type == BlockType::Periphery;
      const bool cpf = c.type == BlockType::Periphery;
      double v;
      if (bi == bj) v = rp ? p.pw : p.cw;
      else if (rp && cpf) v = p.pb;
      else if (rp) v = p.pc;
      else if (!cpf) v = p.cb;
      else v = p.cp;
      mu.block(r.begin, c.begin, r.end - r.begin, c.end - c.begin).setConstant(v);
    }
  return mu;
}

CapabilitySpace build_capability_space(const GmmFit& gmm, double pci_mean, const BlockParams& params,
                                       int block_size, SpaceMode mode, double kappa, std::uint64_t seed) {
  validate(params);
  if (!(kappa > 0.0)) throw ValidationError("kappa must be > 0");
  CapabilitySpace s;
  s.layout = make_layout(gmm, pci_mean, block_size);
  s.params = params;
  s.mode = mode;
  s.kappa = kappa;
  s.seed = seed;
  s.phi = block_means(s.layout, params);
  if (mode == SpaceMode::Beta) {
    std::mt19937_64 rng(seed);
    const Eigen::Index na = s.phi.rows();
    for (Eigen::Index i = 0; i < na; ++i)
      for (Eigen::Index j = 0; j < na; ++j) {
        if (i == j) continue;
        const double mu = s.phi(i, j);
        if (mu >= 1.0) continue;  // Beta(kappa, 0) is a point mass at 1
        std::gamma_distribution<double> ga(kappa * mu, 1.0);
        std::gamma_distribution<double> gb(kappa * (1.0 - mu), 1.0);
        const double a = ga(rng);
        const double b = gb(rng);
        double v = a + b > 0.0 ? a / (a + b) : mu;
        // keep entries inside (0, 1]
        v = std::clamp(v, std::numeric_limits<double>::min(), 1.0);
        s.phi(i, j) = v;
      }
  }
  s.phi.diagonal().setOnes();
  return s;
}

// ---------------------------------------------------------------------------

int capability_count(double g, double pci_min, double pci_max, int cap_max, int n_capabilities) {
  const int hi = std::min(cap_max, n_capabilities);
  if (hi < 1) throw ValidationError("cap_max and capability count must be >= 1");
  if (!(pci_max > pci_min)) return 1;
  const double k = 1.0 + (g - pci_min) / (pci_max - pci_min) * (cap_max - 1);
  const double r = std::nearbyint(std::clamp(k, -1e9, 1e9));  // default rounding mode: half to even
  return static_cast<int>(std::clamp(r, 1.0, static_cast<double>(hi)));
}

Vector attachment_probabilities(const CapabilitySpace& space, const CapabilitySet& current) {
  const int na = space.size();
  Vector score = Vector::Zero(na);
  for (int a : current) score += space.phi.row(a).transpose();
  for (int a : current) score(a) = 0.0;
  const double total = score.sum();
  if (!(total > 0.0)) {
    score.setOnes();
    for (int a : current) score(a) = 0.0;
    return score / score.sum();
  }
  return score / total;
}

Product generate_product(const CapabilitySpace& space, const GmmFit& gmm, int cap_max, std::uint64_t seed) {
  const int na = space.size();
  if (cap_max < 1 || cap_max > na) throw ValidationError("cap_max must lie in [1, N_a]");
  std::mt19937_64 rng(seed);

  // block ~ Categorical(lambda), blocks are in layout order
  const auto& blocks = space.layout.blocks;
  double u = uniform01(rng);
  std::size_t bi = blocks.size() - 1;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    u -= gmm.weights[static_cast<std::size_t>(blocks[b].component)];
    if (u < 0.0) {
      bi = b;
      break;
    }
  }
  const auto comp = static_cast<std::size_t>(blocks[bi].component);
  std::normal_distribution<double> nd(gmm.means[comp], gmm.sds[comp]);
  const double g = nd(rng);
  const int k = capability_count(g, gmm.data_min, gmm.data_max, cap_max, na);

  const int width = blocks[bi].end - blocks[bi].begin;
  const int first = blocks[bi].begin + std::min(width - 1, static_cast<int>(uniform01(rng) * width));
  Product p;
  p.origin_block = static_cast<int>(bi);
  p.capabilities.push_back(first);

  std::vector<char> chosen(static_cast<std::size_t>(na), 0);
  chosen[static_cast<std::size_t>(first)] = 1;
  Vector score = space.phi.row(first).transpose();
  while (static_cast<int>(p.capabilities.size()) < k) {
    double total = 0.0;
    for (int a = 0; a < na; ++a)
      if (!chosen[static_cast<std::size_t>(a)]) total += score(a);
    double v = uniform01(rng) * total;
    int pick = -1;
    for (int a = 0; a < na; ++a) {
      if (chosen[static_cast<std::size_t>(a)]) continue;
      pick = a;
      v -= score(a);
      if (v < 0.0) break;
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    p.capabilities.push_back(pick);
    score += space.phi.row(pick).transpose();
  }
  std::sort(p.capabilities.begin(), p.capabilities.end());
  p.k0 = static_cast<int>(p.capabilities.size());
  return p;
}

double scale_k0(int k0, int k_min, int k_max, double pci_min, double pci_max) {
  if (k_max == k_min) return 0.5 * (pci_min + pci_max);
  return pci_min + static_cast<double>(k0 - k_min) / static_cast<double>(k_max - k_min) * (pci_max - pci_min);
}

ProductCatalog generate_catalog(const CapabilitySpace& space, const GmmFit& gmm, int n_products, int cap_max,
                                std::uint64_t seed) {
  if (n_products < 1) throw ValidationError("N_p must be >= 1");
  ProductCatalog cat;
  cat.gmm = gmm;
  cat.products.resize(static_cast<std::size_t>(n_products));
  parallel_for(cat.products.size(), [&](std::size_t i) {
    cat.products[i] = generate_product(space, gmm, cap_max, derive_seed(seed, {i}));
  });
  std::stable_sort(cat.products.begin(), cat.products.end(),
                   [](const Product& a, const Product& b) { return a.k0 < b.k0; });
  cat.k_min = cat.products.front().k0;
  cat.k_max = cat.products.back().k0;
  cat.pci_min = gmm.data_min;
  cat.pci_max = gmm.data_max;
  for (auto& p : cat.products) p.k_scaled = scale_k0(p.k0, cat.k_min, cat.k_max, cat.pci_min, cat.pci_max);
  return cat;
}

double set_proximity_avg(const CapabilitySpace& space, const CapabilitySet& a1, const CapabilitySet& a2) {
  if (a1.empty() || a2.empty()) throw ValidationError("set proximity of an empty set");
  double s = 0.0;
  for (int a : a1)
    for (int b : a2) s += space.phi(a, b);
  return s / (static_cast<double>(a1.size()) * static_cast<double>(a2.size()));
}

double set_proximity_max_directed(const CapabilitySpace& space, const CapabilitySet& a1, const CapabilitySet& a2) {
  if (a1.empty() || a2.empty()) throw ValidationError("set proximity of an empty set");
  double s = 0.0;
  for (int a : a1) {
    double m = 0.0;
    for (int b : a2) m = std::max(m, space.phi(a, b));
    s += m;
  }
  return s / static_cast<double>(a1.size());
}

double set_proximity_max(const CapabilitySpace& space, const CapabilitySet& a1, const CapabilitySet& a2) {
  return std::min(set_proximity_max_directed(space, a1, a2), set_proximity_max_directed(space, a2, a1));
}

space::ProximityNetwork simulated_product_space(const ProductCatalog& catalog, const CapabilitySpace& space) {
  if (catalog.products.empty()) throw ValidationError("empty catalog");
  const auto np = static_cast<Eigen::Index>(catalog.size());
  Matrix b = Matrix::Zero(np, space.size());
  for (Eigen::Index i = 0; i < np; ++i) {
    const auto& caps = catalog.products[static_cast<std::size_t>(i)].capabilities;
    for (int a : caps) b(i, a) = 1.0 / static_cast<double>(caps.size());
  }
  const Matrix sym = 0.5 * (space.phi + space.phi.transpose());
  space::ProximityNetwork net;
  net.phi = b * sym * b.transpose();
  for (Eigen::Index i = 0; i < np; ++i) {
    net.phi(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < np; ++j) net.phi(j, i) = net.phi(i, j);
  }
  net.products.reserve(static_cast<std::size_t>(np));
  Vector pci(np);
  for (Eigen::Index i = 0; i < np; ++i) {
    net.products.push_back("S" + std::to_string(i));
    pci(i) = catalog.products[static_cast<std::size_t>(i)].k_scaled;
  }
  net.pci = pci;
  return net;
}

Vector capability_k1(const ProductCatalog& catalog, int n_capabilities) {
  Vector sum = Vector::Zero(n_capabilities);
  Vector cnt = Vector::Zero(n_capabilities);
  for (const auto& p : catalog.products)
    for (int a : p.capabilities) {
      sum(a) += p.k0;
      cnt(a) += 1;
    }
  Vector k1(n_capabilities);
  for (int a = 0; a < n_capabilities; ++a)
    k1(a) = cnt(a) > 0 ? sum(a) / cnt(a) : std::numeric_limits<double>::quiet_NaN();
  return k1;
}

double set_k1(const Vector& k1, const CapabilitySet& set, int* skipped) {
  double s = 0.0;
  int used = 0, skip = 0;
  for (int a : set) {
    if (std::isnan(k1(a))) {
      ++skip;
      continue;
    }
    s += k1(a);
    ++used;
  }
  if (skipped) *skipped = skip;
  return used > 0 ? s / used : std::numeric_limits<double>::quiet_NaN();
}

double set_k1(const ProductCatalog& catalog, const CapabilitySet& set, int n_capabilities, int* skipped) {
  return set_k1(capability_k1(catalog, n_capabilities), set, skipped);
}

// ---------------------------------------------------------------------------

double ces(const Vector& x, double rho, double nu, double alpha) {
  if (x.size() == 0) throw ValidationError("CES needs at least one input");
  if (!(nu > 0.0)) throw ValidationError("nu must be > 0");
  if (rho > 1.0) throw ValidationError("rho must be <= 1");
  const double k = static_cast<double>(x.size());
  const double lo = x.minCoeff();
  if (lo <= 0.0) {
    if (rho <= 0.0) return 0.0;
  }
  if (rho == kRhoLeontief) return alpha * std::pow(lo, nu);
  if (rho == 0.0) return alpha * std::exp(nu * x.array().log().mean());
  // log-sum-exp of rho*log x
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) > 0.0) top = std::max(top, rho * std::log(x(i)));
  if (top == -std::numeric_limits<double>::infinity()) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) > 0.0) s += std::exp(rho * std::log(x(i)) - top);
  const double log_mean = top + std::log(s) - std::log(k);
  return alpha * std::exp(nu / rho * log_mean);
}

Vector country_relatedness(const CapabilitySpace& space, const CapabilitySet& c_set) {
  if (c_set.empty()) throw ValidationError("country capability set is empty");
  Vector r = Vector::Zero(space.size());
  for (int a : c_set) r += space.phi.row(a).transpose();
  return r / static_cast<double>(c_set.size());
}

double ces_output(const CapabilitySpace& space, const CapabilitySet& c_set, const Product& product, double rho,
                  double nu, double alpha) {
  const Vector r = country_relatedness(space, c_set);
  Vector x(static_cast<Eigen::Index>(product.capabilities.size()));
  for (std::size_t i = 0; i < product.capabilities.size(); ++i) x(static_cast<Eigen::Index>(i)) = r(product.capabilities[i]);
  return ces(x, rho, nu, alpha);
}

Vector catalog_outputs(const Vector& r, const ProductCatalog& catalog, double rho, double nu) {
  if (!(nu > 0.0)) throw ValidationError("nu must be > 0");
  if (rho > 1.0) throw ValidationError("rho must be <= 1");
  const auto np = static_cast<Eigen::Index>(catalog.size());
  Vector q(np);
  // Per-capability transforms are computed once; each product then needs only
  // a mean over its capabilities.
  if (rho == kRhoLeontief) {
    for (Eigen::Index i = 0; i < np; ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (int a : catalog.products[static_cast<std::size_t>(i)].capabilities) m = std::min(m, r(a));
      q(i) = m <= 0.0 ? 0.0 : std::pow(m, nu);
    }
    return q;
  }
  if (rho == 0.0) {
    const Vector lr = r.array().log();
    for (Eigen::Index i = 0; i < np; ++i) {
      const auto& caps = catalog.products[static_cast<std::size_t>(i)].capabilities;
      double s = 0.0;
      for (int a : caps) s += lr(a);
      q(i) = std::exp(nu * s / static_cast<double>(caps.size()));  // exp(-inf) = 0 for zero inputs
    }
    return q;
  }
  const Vector pw = r.array().pow(rho);
  bool finite = pw.allFinite();
  for (Eigen::Index i = 0; i < np; ++i) {
    const auto& caps = catalog.products[static_cast<std::size_t>(i)].capabilities;
    if (finite) {
      double s = 0.0;
      bool zero = false;
      for (int a : caps) {
        s += pw(a);
        zero = zero || r(a) <= 0.0;
      }
      if (zero && rho < 0.0) {
        q(i) = 0.0;
        continue;
      }
      const double mean = s / static_cast<double>(caps.size());
      q(i) = std::pow(mean, nu / rho);
    } else {
      Vector x(static_cast<Eigen::Index>(caps.size()));
      for (std::size_t k = 0; k < caps.size(); ++k) x(static_cast<Eigen::Index>(k)) = r(caps[k]);
      q(i) = ces(x, rho, nu, 1.0);
    }
  }
  return q;
}

Vector export_shares(const CapabilitySpace& space, const CapabilitySet& c_set, const ProductCatalog& catalog,
                     double rho, double nu) {
  const Vector q = catalog_outputs(country_relatedness(space, c_set), catalog, rho, nu);
  const double total = q.sum();
  if (!(total > 0.0)) throw NumericalError("country disconnected from capability space");
  return q / total;
}

}  // namespace capspace::model
