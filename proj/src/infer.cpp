#include "capspace/infer.hpp"

#include <boost/math/tools/toms748_solve.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>

namespace capspace::infer {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kGrid = 1 << 12;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// DCT-II as FFTW's REDFT10: y_k = 2 sum_j x_j cos(pi (j + 1/2) k / n).
std::vector<double> dct2(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x), out(x.size());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_r2r_1d(n, in.data(), out.data(), FFTW_REDFT10, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

struct Moments {
  double mean = 0.0, sd = 0.0, n_eff = 0.0;
};

Moments weighted_moments(const std::vector<double>& x, const std::vector<double>& w) {
  Moments m;
  double sw = 0.0, sw2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sw2 += wi * wi;
    m.mean += wi * x[i];
  }
  if (!(sw > 0.0)) return m;
  m.mean /= sw;
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    var += wi * (x[i] - m.mean) * (x[i] - m.mean);
  }
  m.sd = std::sqrt(var / sw);
  m.n_eff = sw * sw / sw2;
  return m;
}

// t - xi*gamma^[l](t) from the ISJ fixed-point equation, l = 7.
double isj_fixed_point(double t, double n, const std::vector<double>& i2, const std::vector<double>& a2) {
  auto functional = [&](int s, double time) {
    double f = 0.0;
    for (std::size_t k = 0; k < i2.size(); ++k)
      f += std::pow(i2[k], s) * a2[k] * std::exp(-i2[k] * kPi * kPi * time);
    return 2.0 * std::pow(kPi, 2 * s) * f;
  };
  const int l = 7;
  double f = functional(l, t);
  for (int s = l - 1; s >= 2; --s) {
    double k0 = 1.0;
    for (int j = 1; j <= 2 * s - 1; j += 2) k0 *= j;
    k0 /= std::sqrt(2.0 * kPi);
    const double c = (1.0 + std::pow(0.5, s + 0.5)) / 3.0;
    const double time = std::pow(2.0 * c * k0 / n / f, 2.0 / (3.0 + 2.0 * s));
    f = functional(s, time);
  }
  return t - std::pow(2.0 * n * std::sqrt(kPi) * f, -0.4);
}

}  // namespace

double silverman_bandwidth(const std::vector<double>& x, const std::vector<double>& w) {
  if (x.empty()) throw ValidationError("bandwidth needs samples");
  const auto m = weighted_moments(x, w);
  return 1.06 * m.sd * std::pow(m.n_eff, -0.2);
}

Bandwidth isj_bandwidth(const std::vector<double>& x, const std::vector<double>& w) {
  if (x.empty()) throw ValidationError("bandwidth needs samples");
  if (!w.empty() && w.size() != x.size()) throw ValidationError("weights and samples differ in length");
  Bandwidth out;
  auto fallback = [&](const std::string& why) {
    out.h = silverman_bandwidth(x, w);
    out.fallback = true;
    out.warning = why + "; using Silverman's rule";
    return out;
  };

  std::set<double> distinct;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (w.empty() || w[i] > 0.0) distinct.insert(x[i]);
  if (distinct.size() < 50) return fallback("fewer than 50 distinct samples");

  const double lo = *distinct.begin();
  const double hi = *distinct.rbegin();
  const double range = hi - lo;
  const double mn = lo - range / 10.0;
  const double r = range * 1.2;
  const double dx = r / (kGrid - 1);

  std::vector<double> hist(kGrid, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (!(wi > 0.0)) continue;
    const auto k = std::min<long>(kGrid - 1, static_cast<long>(std::floor((x[i] - mn) / dx)));
    hist[static_cast<std::size_t>(k)] += wi;
  }
  const double total = std::accumulate(hist.begin(), hist.end(), 0.0);
  for (auto& v : hist) v /= total;

  const auto a = dct2(hist);
  std::vector<double> i2(kGrid - 1), a2(kGrid - 1);
  for (int k = 1; k < kGrid; ++k) {
    i2[static_cast<std::size_t>(k - 1)] = static_cast<double>(k) * k;
    a2[static_cast<std::size_t>(k - 1)] = (a[static_cast<std::size_t>(k)] / 2.0) * (a[static_cast<std::size_t>(k)] / 2.0);
  }
  const double n = weighted_moments(x, w).n_eff;
  auto f = [&](double t) { return isj_fixed_point(t, n, i2, a2); };

  const double nc = std::clamp(n, 50.0, 1050.0);
  double tol = 1e-12 + 0.01 * (nc - 50.0) / 1000.0;
  const double f0 = f(0.0);
  for (;;) {
    const double ft = f(tol);
    if (std::isfinite(f0) && std::isfinite(ft) && f0 < 0.0 && ft > 0.0) {
      std::uintmax_t iters = 200;
      auto root = boost::math::tools::toms748_solve(f, 0.0, tol, f0, ft,
                                                    boost::math::tools::eps_tolerance<double>(50), iters);
      const double t = 0.5 * (root.first + root.second);
      if (!(t > 0.0) || iters >= 200) return fallback("ISJ fixed point did not converge");
      out.h = std::sqrt(t) * r;
      return out;
    }
    if (tol >= 0.1) return fallback("ISJ fixed point has no root in (0, 0.1]");
    tol = std::min(tol * 2.0, 0.1);
  }
}

double KdeModel::density(double x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double z = (x - points[i]) / h;
    s += weights[i] * std::exp(-0.5 * z * z);
  }
  return s / (h * std::sqrt(2.0 * kPi));
}

KdeModel fit_kde(const std::vector<double>& points, const std::vector<double>& weights) {
  if (points.empty() || points.size() != weights.size()) throw ValidationError("KDE needs matching points and weights");
  KdeModel k;
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i]) || !(weights[i] >= 0.0)) throw ValidationError("KDE input must be finite and >= 0");
    total += weights[i];
  }
  if (!(total > 0.0)) throw ValidationError("KDE weights sum to zero");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    k.points.push_back(points[i]);
    k.weights.push_back(weights[i] / total);
  }
  auto bw = isj_bandwidth(k.points, k.weights);
  k.h = bw.h;
  k.fallback = bw.fallback;
  k.warning = bw.warning;
  if (!(k.h > 0.0) || !std::isfinite(k.h)) {
    // all mass at one location; borrow the spread of the full point set
    const auto m = weighted_moments(points, {});
    k.h = m.sd > 0.0 ? 1.06 * m.sd * std::pow(static_cast<double>(points.size()), -0.2) : 1.0;
    k.fallback = true;
    k.warning = "degenerate sample; bandwidth from the unweighted points";
  }
  return k;
}

Vector target_vector(const Vector& exports, const Vector& pci, const model::ProductCatalog& catalog, KdeModel* kde) {
  if (exports.size() != pci.size()) throw ValidationError("exports and PCI differ in length");
  if (catalog.products.empty()) throw ValidationError("empty catalog");
  if (!(exports.sum() > 0.0)) throw ValidationError("country has no exports");
  auto k = fit_kde(std::vector<double>(pci.data(), pci.data() + pci.size()),
                   std::vector<double>(exports.data(), exports.data() + exports.size()));
  Vector v(static_cast<Eigen::Index>(catalog.size()));
  for (std::size_t i = 0; i < catalog.size(); ++i) v(static_cast<Eigen::Index>(i)) = k.density(catalog.products[i].k_scaled);
  const double s = v.sum();
  if (s > 0.0) v /= s;
  v = v.cwiseMax(kEps).cwiseMin(1.0);
  v /= v.sum();
  if (kde) *kde = std::move(k);
  return v;
}

double kl_divergence(const Vector& p, const Vector& q) {
  if (p.size() != q.size() || p.size() == 0) throw ValidationError("KL needs equal non-empty vectors");
  Vector a = p.cwiseMax(kEps).cwiseMin(1.0);
  Vector b = q.cwiseMax(kEps).cwiseMin(1.0);
  a /= a.sum();
  b /= b.sum();
  return (a.array() * (a.array() / b.array()).log()).sum();
}

void validate(const AnnealSchedule& s) {
  if (s.iterations < 0) throw ValidationError("iterations must be >= 0");
  if (!(s.t0 > 0.0)) throw ValidationError("T0 must be > 0");
  if (!(s.cooling > 0.0 && s.cooling < 1.0)) throw ValidationError("cooling must lie in (0, 1)");
  if (s.restarts < 1) throw ValidationError("restarts must be >= 1");
  if (!(s.flip_scale > 0.0)) throw ValidationError("flip scale must be > 0");
}

Vector flip_weights(const model::CapabilitySpace& space, const CapabilitySet& set) {
  if (set.empty()) throw ValidationError("capability set is empty");
  const Eigen::Index na = space.size();
  Vector mean = Vector::Zero(na);
  for (int c : set) mean += space.phi.col(c);
  mean /= static_cast<double>(set.size());
  Vector w = mean;
  for (int c : set) w(c) = set.size() == 1 ? 0.5 : 1.0 - mean(c);
  return w;
}

CapabilitySet default_warm_start(const model::ProductCatalog& catalog, const Vector& target) {
  if (static_cast<std::size_t>(target.size()) != catalog.size()) throw ValidationError("target and catalog differ");
  Eigen::Index best = 0;
  target.maxCoeff(&best);
  return catalog.products[static_cast<std::size_t>(best)].capabilities;
}

double set_kl(const model::CapabilitySpace& space, const model::ProductCatalog& catalog, const Vector& target,
              const CapabilitySet& set, double rho, double nu) {
  const Vector q = model::catalog_outputs(model::country_relatedness(space, set), catalog, rho, nu);
  const double total = q.sum();
  if (!(total > 0.0) || !std::isfinite(total)) return std::numeric_limits<double>::infinity();
  return kl_divergence(target, q / total);
}

namespace {

CapabilitySet perturb(const model::CapabilitySpace& space, const CapabilitySet& current, int flips,
                      std::mt19937_64& rng) {
  Vector w = flip_weights(space, current);
  std::vector<char> member(static_cast<std::size_t>(space.size()), 0);
  for (int c : current) member[static_cast<std::size_t>(c)] = 1;
  // weighted draws without replacement
  for (int f = 0; f < flips; ++f) {
    const double total = w.sum();
    if (!(total > 0.0)) break;
    double u = uniform01(rng) * total;
    Eigen::Index pick = -1;
    for (Eigen::Index a = 0; a < w.size(); ++a) {
      if (w(a) <= 0.0) continue;
      pick = a;
      u -= w(a);
      if (u < 0.0) break;
    }
    member[static_cast<std::size_t>(pick)] ^= 1;
    w(pick) = 0.0;
  }
  CapabilitySet out;
  for (std::size_t a = 0; a < member.size(); ++a)
    if (member[a]) out.push_back(static_cast<int>(a));
  return out;
}

}  // namespace

AnnealResult anneal_capabilities(const model::CapabilitySpace& space, const model::ProductCatalog& catalog,
                                 const Vector& target, double rho, double nu, const CapabilitySet& warm_start,
                                 const AnnealSchedule& schedule, std::uint64_t seed) {
  validate(schedule);
  if (warm_start.empty()) throw ValidationError("warm start set is empty");
  if (static_cast<std::size_t>(target.size()) != catalog.size()) throw ValidationError("target and catalog differ");
  CapabilitySet warm = warm_start;
  std::sort(warm.begin(), warm.end());
  warm.erase(std::unique(warm.begin(), warm.end()), warm.end());
  for (int c : warm)
    if (c < 0 || c >= space.size()) throw ValidationError("warm start has an out-of-range capability");

  AnnealResult res;
  res.warm_kl = set_kl(space, catalog, target, warm, rho, nu);
  res.set = warm;
  res.kl = res.warm_kl;
  double uphill_sum = 0.0;
  int uphill_n = 0;

  for (int r = 0; r < schedule.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    CapabilitySet current = warm;
    double cur = -res.warm_kl;
    CapabilitySet best = warm;
    double best_score = cur;
    std::vector<double> trace;
    double t = schedule.t0;
    for (int it = 0; it < schedule.iterations; ++it, t *= schedule.cooling) {
      const int flips = static_cast<int>(std::nearbyint(schedule.flip_scale * t));
      if (flips == 0) {
        trace.push_back(-cur);  // proposal equals the current set
        continue;
      }
      CapabilitySet cand = perturb(space, current, flips, rng);
      if (cand.empty()) {
        ++res.rejected_empty;
        trace.push_back(-cur);
        continue;
      }
      const double score = -set_kl(space, catalog, target, cand, rho, nu);
      bool accept = score > cur;
      if (!accept && !schedule.greedy && std::isfinite(score)) {
        const double p = std::exp((score - cur) / t);
        if (score < cur) {
          uphill_sum += p;
          ++uphill_n;
        }
        accept = uniform01(rng) < p;
      }
      if (accept) {
        current = std::move(cand);
        cur = score;
        ++res.accepted;
        if (cur > best_score) {
          best = current;
          best_score = cur;
        }
      }
      trace.push_back(-cur);
    }
    res.restart_kl.push_back(-best_score);
    if (r == 0 || -best_score < res.kl) res.trace = std::move(trace);
    if (-best_score < res.kl) {
      res.kl = -best_score;
      res.set = std::move(best);
    }
  }
  res.mean_uphill_acceptance = uphill_n > 0 ? uphill_sum / uphill_n : 0.0;
  return res;
}

Clarity clarity(const Vector& target, const Vector& predicted) {
  Clarity c;
  const Vector uniform = Vector::Constant(target.size(), 1.0 / static_cast<double>(target.size()));
  const double base = kl_divergence(target, uniform);
  if (!(base > 1e-15)) {
    c.defined = false;
    c.ratio = std::numeric_limits<double>::quiet_NaN();
    c.clarity = std::numeric_limits<double>::quiet_NaN();
    return c;
  }
  c.ratio = kl_divergence(target, predicted) / base;
  c.clarity = 1.0 - c.ratio;
  return c;
}

InferenceResult optimize_rho_nu(const model::CapabilitySpace& space, const model::ProductCatalog& catalog,
                                const Vector& target, const InferenceOptions& opt, std::uint64_t seed) {
  if (opt.fit_rho_nu && (opt.rho_grid.empty() || opt.nu_grid.empty())) throw ValidationError("empty rho or nu grid");
  const CapabilitySet warm = default_warm_start(catalog, target);
  InferenceResult out;

  if (!opt.fit_rho_nu) {
    auto a = anneal_capabilities(space, catalog, target, 1.0, 1.0, warm, opt.schedule, derive_seed(seed, {0}));
    out.set = a.set;
    out.kl = a.kl;
    out.warm_kl = a.warm_kl;
    out.rho = out.nu = 1.0;
  } else {
    std::vector<AnnealResult> s1(opt.rho_grid.size());
    parallel_for(s1.size(), [&](std::size_t i) {
      s1[i] = anneal_capabilities(space, catalog, target, opt.rho_grid[i], 1.0, warm, opt.schedule,
                                  derive_seed(seed, {1, i}));
    });
    std::size_t bi = 0;
    for (std::size_t i = 0; i < s1.size(); ++i) {
      out.stage1_kl.push_back(s1[i].kl);
      if (s1[i].kl < s1[bi].kl) bi = i;  // ties keep the earlier grid entry
    }
    out.rho = opt.rho_grid[bi];
    out.warm_kl = s1[bi].warm_kl;

    std::vector<AnnealResult> s2(opt.nu_grid.size());
    parallel_for(s2.size(), [&](std::size_t j) {
      s2[j] = anneal_capabilities(space, catalog, target, out.rho, opt.nu_grid[j], s1[bi].set, opt.schedule,
                                  derive_seed(seed, {2, j}));
    });
    std::size_t bj = 0;
    for (std::size_t j = 0; j < s2.size(); ++j) {
      out.stage2_kl.push_back(s2[j].kl);
      if (s2[j].kl < s2[bj].kl) bj = j;
    }
    out.nu = opt.nu_grid[bj];
    out.set = s2[bj].set;
    out.kl = s2[bj].kl;
  }

  const Vector q = model::catalog_outputs(model::country_relatedness(space, out.set), catalog, out.rho, out.nu);
  out.clarity = clarity(target, q / q.sum());
  out.k0 = static_cast<int>(out.set.size());
  out.k1 = model::set_k1(catalog, out.set, space.size(), &out.k1_skipped);
  return out;
}

}  // namespace capspace::infer
