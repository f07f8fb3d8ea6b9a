#include "capspace/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace capspace::calib {

CmaResult cma_es(const Objective& f, const Vector& lower, const Vector& upper, const Vector& x0,
                 const CmaOptions& opt) {
  const Eigen::Index d = x0.size();
  if (d < 1 || lower.size() != d || upper.size() != d) throw ValidationError("CMA-ES bounds and start differ in size");
  if (opt.population < 2) throw ValidationError("CMA-ES population must be >= 2");
  if (opt.generations < 0) throw ValidationError("CMA-ES generations must be >= 0");
  if (!(opt.sigma0 > 0.0)) throw ValidationError("CMA-ES sigma0 must be > 0");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(lower(i) < upper(i))) throw ValidationError("CMA-ES bounds need low < high");
    if (!(x0(i) >= lower(i) && x0(i) <= upper(i))) throw ValidationError("CMA-ES start lies outside the bounds");
  }
  const Vector width = upper - lower;
  auto to_x = [&](const Vector& u) -> Vector { return lower + width.cwiseProduct(u); };
  auto score = [](double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); };

  // strategy parameters, standard defaults
  const int lambda = opt.population;
  const int mu = lambda / 2;
  Vector w(mu);
  for (int i = 0; i < mu; ++i) w(i) = std::log(mu + 0.5) - std::log(i + 1.0);
  w /= w.sum();
  const double mueff = 1.0 / w.squaredNorm();
  const double n = static_cast<double>(d);
  const double cs = (mueff + 2.0) / (n + mueff + 5.0);
  const double ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
  const double cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
  const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
  const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) * (n + 2.0) + mueff));
  const double chi = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  Vector m = (x0 - lower).cwiseQuotient(width);
  double sigma = opt.sigma0;
  Matrix c = Matrix::Identity(d, d);
  Matrix b = Matrix::Identity(d, d);
  Vector diag = Vector::Ones(d);
  Matrix inv_sqrt_c = Matrix::Identity(d, d);
  Vector ps = Vector::Zero(d), pc = Vector::Zero(d);

  CmaResult res;
  res.best_x = x0;
  res.best_f = score(f(x0, 0, 0));
  res.evaluations = 1;
  res.trace.push_back(res.best_f);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  Matrix u(d, lambda);
  std::vector<double> fit(static_cast<std::size_t>(lambda));
  std::vector<int> order(static_cast<std::size_t>(lambda));

  for (int g = 1; g <= opt.generations; ++g) {
    for (int k = 0; k < lambda; ++k) {
      Vector z(d);
      for (Eigen::Index i = 0; i < d; ++i) z(i) = gauss(rng);
      u.col(k) = (m + sigma * (b * diag.cwiseProduct(z))).cwiseMax(0.0).cwiseMin(1.0);
    }
    parallel_for(static_cast<std::size_t>(lambda), [&](std::size_t k) {
      fit[k] = score(f(to_x(u.col(static_cast<Eigen::Index>(k))), g, static_cast<int>(k)));
    });
    res.evaluations += lambda;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b_) {
      return fit[static_cast<std::size_t>(a)] < fit[static_cast<std::size_t>(b_)];
    });
    const int top = order[0];
    if (fit[static_cast<std::size_t>(top)] < res.best_f) {
      res.best_f = fit[static_cast<std::size_t>(top)];
      res.best_x = to_x(u.col(top));
      res.best_generation = g;
      res.best_index = top;
    }
    res.trace.push_back(res.best_f);

    // the clipped candidates drive the update
    const Vector m_old = m;
    m.setZero();
    for (int i = 0; i < mu; ++i) m += w(i) * u.col(order[static_cast<std::size_t>(i)]);
    const Vector yw = (m - m_old) / sigma;
    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (inv_sqrt_c * yw);
    const double ps_norm = ps.norm();
    const bool hs = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * g)) < (1.4 + 2.0 / (n + 1.0)) * chi;
    pc = (1.0 - cc) * pc + (hs ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * yw;

    Matrix rank_mu = Matrix::Zero(d, d);
    for (int i = 0; i < mu; ++i) {
      const Vector y = (u.col(order[static_cast<std::size_t>(i)]) - m_old) / sigma;
      rank_mu += w(i) * y * y.transpose();
    }
    c = (1.0 - c1 - cmu) * c + c1 * (pc * pc.transpose() + (hs ? 0.0 : cc * (2.0 - cc)) * c) + cmu * rank_mu;
    c = 0.5 * (c + c.transpose());
    sigma *= std::exp((cs / ds) * (ps_norm / chi - 1.0));

    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    b = es.eigenvectors();
    diag = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
    inv_sqrt_c = b * diag.cwiseInverse().asDiagonal() * b.transpose();
  }
  res.final_mean = to_x(m);
  res.final_sigma = sigma;
  return res;
}

// ---------------------------------------------------------------------------

void validate(const CalibrationConfig& cfg) {
  const auto x0 = cfg.initial.to_array();
  for (std::size_t i = 0; i < 6; ++i) {
    if (!(cfg.lower[i] < cfg.upper[i]))
      throw ValidationError(std::string("bounds for ") + model::BlockParams::names()[i] + " need low < high");
    if (!(x0[i] >= cfg.lower[i] && x0[i] <= cfg.upper[i]))
      throw ValidationError(std::string("initial ") + model::BlockParams::names()[i] + " lies outside its bounds");
    if (!(cfg.lower[i] > 0.0 && cfg.upper[i] <= 1.0))
      throw ValidationError("parameter bounds must lie in (0, 1]");
  }
  if (cfg.model.n_products < 2) throw ValidationError("need at least 2 simulated products");
  if (cfg.model.cap_max < 1) throw ValidationError("cap_max must be >= 1");
  if (cfg.model.block_size < 1) throw ValidationError("block size must be >= 1");
  if (!(cfg.model.kappa > 0.0)) throw ValidationError("kappa must be > 0");
}

int repair(model::BlockParams& p) {
  int swaps = 0;
  if (p.pb > p.pw) {
    std::swap(p.pb, p.pw);
    ++swaps;
  }
  if (p.cb > p.cw) {
    std::swap(p.cb, p.cw);
    ++swaps;
  }
  return swaps;
}

space::ProximityNetwork simulate_network(const model::GmmFit& gmm, const model::BlockParams& params,
                                         const ModelConfig& mc, std::uint64_t seed) {
  auto cap = model::build_capability_space(gmm, gmm.data_mean, params, mc.block_size, mc.mode, mc.kappa,
                                           derive_seed(seed, {0}));
  auto cat = model::generate_catalog(cap, gmm, mc.n_products, mc.cap_max, derive_seed(seed, {1}));
  return model::simulated_product_space(cat, cap);
}

double weight_ks_distance(const std::vector<double>& sorted_empirical, const space::ProximityNetwork& simulated) {
  auto sim = space::edge_weights(simulated);
  const auto& a = sorted_empirical;
  if (sim.empty() || a.empty()) return std::numeric_limits<double>::infinity();
  std::sort(sim.begin(), sim.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(sim.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < sim.size()) {
    const double x = std::min(a[i], sim[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < sim.size() && sim[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

namespace {

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

model::BlockParams from_vector(const Vector& x) {
  std::array<double, 6> a{};
  for (std::size_t i = 0; i < 6; ++i) a[i] = x(static_cast<Eigen::Index>(i));
  return model::BlockParams::from_array(a);
}

}  // namespace

ComparisonReport compare_networks(const space::ProximityNetwork& empirical, const space::ProximityNetwork& simulated,
                                  std::uint64_t seed) {
  if (!empirical.pci || !simulated.pci) throw ValidationError("comparison needs PCI on both networks");
  ComparisonReport r;
  auto thresholded = space::adaptive_threshold(empirical, simulated);
  const double before = static_cast<double>(space::edge_weights(simulated).size());
  const double after = static_cast<double>(space::edge_weights(thresholded).size());
  r.dropped_fraction = before > 0.0 ? 1.0 - after / before : 0.0;
  r.empirical = space::network_report(empirical, *empirical.pci, seed);
  r.simulated = space::network_report(thresholded, *thresholded.pci, seed);
  r.weight_ks = space::ks_two_sample(space::edge_weights(empirical), space::edge_weights(thresholded));
  r.degree_ks = space::ks_two_sample(as_std(space::degrees(empirical)), as_std(space::degrees(thresholded)));
  r.centrality_ks = space::ks_two_sample(as_std(space::eigenvector_centrality(empirical)),
                                         as_std(space::eigenvector_centrality(thresholded)));
  return r;
}

CalibrationResult calibrate_block_params(const space::ProximityNetwork& empirical, const model::GmmFit& gmm,
                                         const CalibrationConfig& cfg) {
  validate(cfg);
  auto emp_w = space::edge_weights(empirical);
  if (emp_w.empty()) throw ValidationError("empirical network has no positive edges");
  std::sort(emp_w.begin(), emp_w.end());

  Vector lo(6), hi(6), x0(6);
  const auto init = cfg.initial.to_array();
  for (std::size_t i = 0; i < 6; ++i) {
    lo(static_cast<Eigen::Index>(i)) = cfg.lower[i];
    hi(static_cast<Eigen::Index>(i)) = cfg.upper[i];
    x0(static_cast<Eigen::Index>(i)) = init[i];
  }
  const std::uint64_t run = cfg.cma.seed;
  std::vector<int> swaps;  // per (generation, index), written by index
  const std::size_t lambda = static_cast<std::size_t>(cfg.cma.population);
  swaps.assign((static_cast<std::size_t>(cfg.cma.generations) + 1) * lambda, 0);

  auto objective = [&](const Vector& x, int gen, int idx) {
    auto p = from_vector(x);
    swaps[static_cast<std::size_t>(gen) * lambda + static_cast<std::size_t>(idx)] = repair(p);
    const auto sim = simulate_network(gmm, p, cfg.model, derive_seed(run, {static_cast<std::uint64_t>(gen),
                                                                           static_cast<std::uint64_t>(idx)}));
    return weight_ks_distance(emp_w, sim);
  };

  CalibrationResult res;
  res.cma = cma_es(objective, lo, hi, x0, cfg.cma);
  res.best = from_vector(res.cma.best_x);
  repair(res.best);
  res.best_d = res.cma.best_f;
  res.trace = res.cma.trace;
  res.sigma0 = cfg.cma.sigma0;
  for (std::size_t k = 0; k < swaps.size(); ++k) {
    if (swaps[k] == 0) continue;
    res.repairs += swaps[k];
    res.log.push_back("generation " + std::to_string(k / lambda) + " candidate " + std::to_string(k % lambda) +
                      ": phi_b > phi_w, swapped");
  }
  if (cfg.compare) {
    // rebuild the winning network with the seed it was scored under
    const auto sim = simulate_network(gmm, res.best, cfg.model,
                                      derive_seed(run, {static_cast<std::uint64_t>(res.cma.best_generation),
                                                        static_cast<std::uint64_t>(res.cma.best_index)}));
    res.report = compare_networks(empirical, sim, run);
    res.has_report = true;
  }
  return res;
}

std::vector<SweepPoint> sweep_kappa(const space::ProximityNetwork& empirical, const model::GmmFit& gmm,
                                    const model::BlockParams& params, const ModelConfig& mc,
                                    const std::vector<double>& kappas, std::uint64_t seed, bool compare) {
  auto emp_w = space::edge_weights(empirical);
  std::sort(emp_w.begin(), emp_w.end());
  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    ModelConfig m = mc;
    m.mode = model::SpaceMode::Beta;
    m.kappa = kappas[i];
    SweepPoint pt;
    pt.label = "kappa=" + std::to_string(kappas[i]);
    pt.params = params;
    const auto sim = simulate_network(gmm, params, m, derive_seed(seed, {i}));
    pt.ks_d = weight_ks_distance(emp_w, sim);
    if (compare) {
      pt.report = compare_networks(empirical, sim, seed);
      pt.has_report = true;
    }
    out.push_back(std::move(pt));
  }
  return out;
}

std::vector<SweepPoint> sweep_components(const space::ProximityNetwork& empirical, const CalibrationConfig& cfg,
                                         const std::vector<int>& ns, int total_capabilities) {
  if (!empirical.pci) throw ValidationError("n sweep needs empirical PCI");
  const auto pci = as_std(*empirical.pci);
  std::vector<SweepPoint> out;
  for (int n : ns) {
    if (n < 1 || total_capabilities % n != 0)
      throw ValidationError("n must divide the total capability count " + std::to_string(total_capabilities));
    CalibrationConfig c = cfg;
    c.model.block_size = total_capabilities / n;
    c.model.cap_max = std::min(cfg.model.cap_max, total_capabilities);
    const auto gmm = model::fit_gmm(pci, n, derive_seed(cfg.cma.seed, {static_cast<std::uint64_t>(n)}));
    auto r = calibrate_block_params(empirical, gmm, c);
    SweepPoint pt;
    pt.label = "n=" + std::to_string(n);
    pt.params = r.best;
    pt.ks_d = r.best_d;
    pt.has_report = r.has_report;
    pt.report = std::move(r.report);
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace capspace::calib
