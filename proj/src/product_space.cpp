#include "capspace/product_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>

namespace capspace::space {

namespace {

// ---------------------------------------------------------------------------
// Leiden on a dense weighted graph (self-loops appear after aggregation).

struct DenseGraph {
  Matrix w;
  Vector k;      // strengths, row sums including self-loops
  double two_m;  // total weight, both directions
};

int renumber(std::vector<int>& labels) {
  std::map<int, int> ids;
  for (int& l : labels) {
    auto [it, inserted] = ids.try_emplace(l, static_cast<int>(ids.size()));
    l = it->second;
  }
  return static_cast<int>(ids.size());
}

// Queue-based local moving. Returns true if any node changed community.
bool move_nodes_fast(const DenseGraph& g, double gamma, std::vector<int>& comm, std::mt19937_64& rng) {
  const int n = static_cast<int>(g.w.rows());
  std::vector<double> tot(static_cast<std::size_t>(n), 0.0);
  std::vector<int> size(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v) {
    tot[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])] += g.k(v);
    ++size[static_cast<std::size_t>(comm[static_cast<std::size_t>(v)])];
  }
  std::vector<int> empty;
  for (int c = n - 1; c >= 0; --c)
    if (size[static_cast<std::size_t>(c)] == 0) empty.push_back(c);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::deque<int> queue(order.begin(), order.end());
  std::vector<char> queued(static_cast<std::size_t>(n), 1);

  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  std::vector<int> touched;
  bool changed = false;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    queued[static_cast<std::size_t>(v)] = 0;
    const auto vs = static_cast<std::size_t>(v);
    const int old = comm[vs];
    const double kv = g.k(v);

    touched.clear();
    for (int j = 0; j < n; ++j) {
      const double wij = g.w(v, j);
      if (j == v || wij <= 0.0) continue;
      const auto cj = static_cast<std::size_t>(comm[static_cast<std::size_t>(j)]);
      if (acc[cj] == 0.0) touched.push_back(comm[static_cast<std::size_t>(j)]);
      acc[cj] += wij;
    }
    tot[static_cast<std::size_t>(old)] -= kv;
    --size[static_cast<std::size_t>(old)];
    if (size[static_cast<std::size_t>(old)] == 0) empty.push_back(old);

    int best = old;
    double best_gain = acc[static_cast<std::size_t>(old)] - gamma * kv * tot[static_cast<std::size_t>(old)] / g.two_m;
    for (int c : touched) {
      const double gain = acc[static_cast<std::size_t>(c)] - gamma * kv * tot[static_cast<std::size_t>(c)] / g.two_m;
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    if (best_gain < 0.0 && size[static_cast<std::size_t>(old)] > 0) {
      // an empty community has gain exactly zero
      best = empty.back();
    }
    for (int c : touched) acc[static_cast<std::size_t>(c)] = 0.0;

    if (!empty.empty() && empty.back() == best) empty.pop_back();
    else if (size[static_cast<std::size_t>(best)] == 0)
      empty.erase(std::find(empty.begin(), empty.end(), best));
    tot[static_cast<std::size_t>(best)] += kv;
    ++size[static_cast<std::size_t>(best)];
    comm[vs] = best;
    if (best != old) {
      changed = true;
      for (int j = 0; j < n; ++j) {
        if (j == v || g.w(v, j) <= 0.0) continue;
        const auto js = static_cast<std::size_t>(j);
        if (!queued[js] && comm[js] != best) {
          queued[js] = 1;
          queue.push_back(j);
        }
      }
    }
  }
  return changed;
}

// Refines each community of `comm` by randomized merging of singletons into
// well-connected sub-communities.
std::vector<int> refine(const DenseGraph& g, double gamma, double theta, const std::vector<int>& comm,
                        std::mt19937_64& rng) {
  const int n = static_cast<int>(g.w.rows());
  const double m = g.two_m / 2.0;
  std::vector<int> ref(static_cast<std::size_t>(n));
  std::iota(ref.begin(), ref.end(), 0);
  std::vector<double> kref(g.k.data(), g.k.data() + n);
  std::vector<int> sref(static_cast<std::size_t>(n), 1);
  std::vector<double> ext(static_cast<std::size_t>(n), 0.0);
  std::vector<double> wvc(static_cast<std::size_t>(n), 0.0);

  std::map<int, std::vector<int>> members;
  for (int v = 0; v < n; ++v) members[comm[static_cast<std::size_t>(v)]].push_back(v);

  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  std::vector<int> touched;
  std::vector<int> cand;
  std::vector<double> cand_w;
  for (auto& [cid, mem] : members) {
    double kc = 0.0;
    for (int v : mem) kc += g.k(v);
    for (int v : mem) {
      double s = 0.0;
      for (int u : mem)
        if (u != v) s += g.w(v, u);
      wvc[static_cast<std::size_t>(v)] = s;
      ext[static_cast<std::size_t>(v)] = s;
    }
    std::vector<int> order = mem;
    std::shuffle(order.begin(), order.end(), rng);
    for (int v : order) {
      const auto vs = static_cast<std::size_t>(v);
      if (sref[static_cast<std::size_t>(ref[vs])] != 1) continue;
      const double kv = g.k(v);
      if (wvc[vs] < gamma * kv * (kc - kv) / g.two_m) continue;

      touched.clear();
      for (int u : mem) {
        if (u == v) continue;
        const double w = g.w(v, u);
        if (w <= 0.0) continue;
        const auto r = static_cast<std::size_t>(ref[static_cast<std::size_t>(u)]);
        if (acc[r] == 0.0) touched.push_back(ref[static_cast<std::size_t>(u)]);
        acc[r] += w;
      }
      const int own = ref[vs];
      cand.assign(1, own);
      cand_w.assign(1, 0.0);  // staying alone: zero gain
      for (int r : touched) {
        const auto rs = static_cast<std::size_t>(r);
        if (ext[rs] < gamma * kref[rs] * (kc - kref[rs]) / g.two_m) continue;
        const double gain = (acc[rs] - gamma * kv * kref[rs] / g.two_m) / m;
        if (gain < 0.0) continue;
        cand.push_back(r);
        cand_w.push_back(gain);
      }
      const double top = *std::max_element(cand_w.begin(), cand_w.end());
      for (double& x : cand_w) x = std::exp((x - top) / theta);
      std::discrete_distribution<std::size_t> pick(cand_w.begin(), cand_w.end());
      const int r = cand[pick(rng)];
      if (r != own) {
        const auto rs = static_cast<std::size_t>(r);
        ext[rs] = ext[rs] + wvc[vs] - 2.0 * acc[rs];
        kref[rs] += kv;
        ++sref[rs];
        kref[static_cast<std::size_t>(own)] = 0.0;
        sref[static_cast<std::size_t>(own)] = 0;
        ref[vs] = r;
      }
      for (int t : touched) acc[static_cast<std::size_t>(t)] = 0.0;
    }
  }
  return ref;
}

DenseGraph aggregate(const DenseGraph& g, const std::vector<int>& ref, int count) {
  DenseGraph out;
  out.w = Matrix::Zero(count, count);
  const auto n = g.w.rows();
  // Sum columns into groups, then rows.
  Matrix cols = Matrix::Zero(n, count);
  for (Eigen::Index j = 0; j < n; ++j) cols.col(ref[static_cast<std::size_t>(j)]) += g.w.col(j);
  for (Eigen::Index i = 0; i < n; ++i) out.w.row(ref[static_cast<std::size_t>(i)]) += cols.row(i);
  out.k = Vector::Zero(count);
  for (Eigen::Index i = 0; i < n; ++i) out.k(ref[static_cast<std::size_t>(i)]) += g.k(i);
  out.two_m = g.two_m;
  return out;
}

std::vector<int> leiden_pass(const DenseGraph& base, std::vector<int> start, const LeidenOptions& opt,
                             std::mt19937_64& rng) {
  const auto n0 = static_cast<std::size_t>(base.w.rows());
  std::vector<int> node_of(n0);
  std::iota(node_of.begin(), node_of.end(), 0);
  DenseGraph g = base;
  std::vector<int> comm = std::move(start);
  for (;;) {
    move_nodes_fast(g, opt.resolution, comm, rng);
    const int n = static_cast<int>(g.w.rows());
    if (renumber(comm) == n) break;
    std::vector<int> ref = refine(g, opt.resolution, opt.theta, comm, rng);
    const int r = renumber(ref);
    if (r == n) break;
    std::vector<int> next(static_cast<std::size_t>(r));
    for (int v = 0; v < n; ++v) next[static_cast<std::size_t>(ref[static_cast<std::size_t>(v)])] = comm[static_cast<std::size_t>(v)];
    for (auto& x : node_of) x = ref[static_cast<std::size_t>(x)];
    g = aggregate(g, ref, r);
    comm = std::move(next);
  }
  std::vector<int> out(n0);
  for (std::size_t i = 0; i < n0; ++i) out[i] = comm[static_cast<std::size_t>(node_of[i])];
  renumber(out);
  return out;
}

double pearson_unchecked(const Vector& x, const Vector& y) {
  const Vector dx = x.array() - x.mean();
  const Vector dy = y.array() - y.mean();
  return dx.dot(dy) / std::sqrt(dx.squaredNorm() * dy.squaredNorm());
}

bool all_integers(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x == std::floor(x); });
}

}  // namespace

// ---------------------------------------------------------------------------

ProximityNetwork proximity_matrix(const trade::SpecializationMatrix& s) {
  if (!s.is_pruned()) throw ValidationError("specialization matrix has empty rows or columns; prune it first");
  const Matrix co = s.m.transpose() * s.m;
  const Eigen::Index p = s.n_products();
  ProximityNetwork net;
  net.products = s.products;
  net.phi = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = j + 1; i < p; ++i) {
      const double k = static_cast<double>(std::max(s.ubiquity(i), s.ubiquity(j)));
      const double v = co(i, j) / k;
      net.phi(i, j) = v;
      net.phi(j, i) = v;
    }
  return net;
}

Matrix density_omega(const trade::SpecializationMatrix& s, const ProximityNetwork& net) {
  if (s.n_products() != net.size()) throw ValidationError("network and specialization matrix are not aligned");
  if ((s.diversity.array() <= 0).any()) throw ValidationError("zero-diversity country present; prune first");
  const Vector dinv = s.diversity.cast<double>().cwiseInverse();
  return dinv.asDiagonal() * (s.m * net.phi);
}

double graph_density(const ProximityNetwork& net) {
  const auto p = net.size();
  if (p < 2) throw ValidationError("graph density needs at least 2 nodes");
  double edges = 0;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = j + 1; i < p; ++i)
      if (net.phi(i, j) > 0.0) edges += 1;
  return 2.0 * edges / (static_cast<double>(p) * static_cast<double>(p - 1));
}

double transitivity(const ProximityNetwork& net) {
  const auto p = static_cast<std::size_t>(net.size());
  const std::size_t words = (p + 63) / 64;
  std::vector<std::uint64_t> bits(p * words, 0);
  std::vector<double> deg(p, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (i != j && net.phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) {
        bits[i * words + j / 64] |= std::uint64_t{1} << (j % 64);
        deg[i] += 1;
      }
  double closed = 0.0;  // each triangle counted 3 times (once per edge)
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      if (!(bits[i * words + j / 64] >> (j % 64) & 1U)) continue;
      std::uint64_t common = 0;
      for (std::size_t w = 0; w < words; ++w) common += static_cast<std::uint64_t>(std::popcount(bits[i * words + w] & bits[j * words + w]));
      closed += static_cast<double>(common);
    }
  double triplets = 0.0;
  for (double d : deg) triplets += d * (d - 1) / 2.0;
  return triplets > 0.0 ? closed / triplets : 0.0;
}

double modularity(const ProximityNetwork& net, const Partition& part) {
  if (static_cast<Eigen::Index>(part.size()) != net.size()) throw ValidationError("partition length differs from node count");
  const Vector s = net.phi.rowwise().sum();
  const double two_m = s.sum();
  if (two_m <= 0.0) return 0.0;
  std::map<int, std::pair<double, double>> acc;  // community -> (internal, strength)
  const auto p = net.size();
  for (Eigen::Index i = 0; i < p; ++i) {
    auto& a = acc[part[static_cast<std::size_t>(i)]];
    a.second += s(i);
    for (Eigen::Index j = 0; j < p; ++j)
      if (part[static_cast<std::size_t>(j)] == part[static_cast<std::size_t>(i)]) a.first += net.phi(i, j);
  }
  double q = 0.0;
  for (const auto& [c, a] : acc) q += a.first / two_m - (a.second / two_m) * (a.second / two_m);
  return q;
}

Partition leiden_partition(const ProximityNetwork& net, std::uint64_t seed, const LeidenOptions& opt) {
  const auto n = static_cast<std::size_t>(net.size());
  Partition part(n);
  std::iota(part.begin(), part.end(), 0);
  DenseGraph g{net.phi, net.phi.rowwise().sum(), net.phi.sum()};
  if (n == 0 || !(g.two_m > 0.0)) return part;
  std::mt19937_64 rng(seed);
  double best_q = modularity(net, part);
  for (int it = 0; it < opt.max_iterations; ++it) {
    Partition next = leiden_pass(g, part, opt, rng);
    const double q = modularity(net, next);
    if (next == part || q <= best_q + 1e-14) {
      if (q > best_q) part = std::move(next);
      break;
    }
    part = std::move(next);
    best_q = q;
  }
  return part;
}

Partition pci_bin_partition(const Vector& pci, int n_bins) {
  if (n_bins < 1) throw ValidationError("n_bins must be >= 1");
  Partition part(static_cast<std::size_t>(pci.size()), 0);
  if (pci.size() == 0) return part;
  const double lo = pci.minCoeff();
  const double hi = pci.maxCoeff();
  if (hi > lo) {
    for (Eigen::Index i = 0; i < pci.size(); ++i) {
      const int b = static_cast<int>(std::floor((pci(i) - lo) / (hi - lo) * n_bins));
      part[static_cast<std::size_t>(i)] = std::clamp(b, 0, n_bins - 1);
    }
  }
  renumber(part);
  return part;
}

PciBinScan scan_pci_bins(const ProximityNetwork& net, const Vector& pci, int max_bins) {
  PciBinScan scan;
  scan.best_q = -std::numeric_limits<double>::infinity();
  for (int n = 1; n <= max_bins; ++n) {
    const double q = modularity(net, pci_bin_partition(pci, n));
    scan.q_by_n.push_back(q);
    if (q > scan.best_q) {
      scan.best_q = q;
      scan.best_n = n;
    }
  }
  return scan;
}

Vector eigenvector_centrality(const ProximityNetwork& net, double tol, int max_iter) {
  const auto p = net.size();
  if (p == 0) return Vector();
  // Phi + I has the same eigenvectors and a strictly dominant Perron root,
  // which rules out the +/- oscillation of bipartite graphs.
  Vector x = Vector::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  double residual = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector y = net.phi * x;
    const double lambda = x.dot(y);
    residual = (y - lambda * x).lpNorm<Eigen::Infinity>();
    if (residual <= tol) {
      Vector c = x.cwiseAbs();
      const double mx = c.maxCoeff();
      return mx > 0.0 ? Vector(c / mx) : c;
    }
    x = (y + x).normalized();
  }
  throw NumericalError("eigenvector centrality did not converge; residual " + std::to_string(residual));
}

Vector degrees(const ProximityNetwork& net) {
  return (net.phi.array() > 0.0).cast<double>().rowwise().sum();
}

std::vector<double> edge_weights(const ProximityNetwork& net) {
  std::vector<double> w;
  const auto p = net.size();
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j)
      if (net.phi(i, j) > 0.0) w.push_back(net.phi(i, j));
  return w;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

DistributionSummary summary_stats(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("summary of empty data");
  DistributionSummary s;
  s.n = values.size();
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  s.min = v.front();
  s.max = v.back();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  s.median = quantile_sorted(v, 0.5);
  s.iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0 && s.max > s.min) {
    s.skew = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2) - 3.0;
  }

  if (all_integers(v) || s.iqr <= 0.0) {
    s.mode_method = ModeMethod::ExactCount;
    std::size_t best = 0;
    for (std::size_t i = 0; i < v.size();) {
      std::size_t j = i;
      while (j < v.size() && v[j] == v[i]) ++j;
      if (j - i > best) {
        best = j - i;
        s.mode = v[i];
      }
      i = j;
    }
  } else {
    s.mode_method = ModeMethod::Histogram;
    const double width = 2.0 * s.iqr / std::cbrt(n);
    const auto bins = static_cast<std::size_t>(std::clamp(std::ceil((s.max - s.min) / width), 1.0, 1e6));
    std::vector<std::size_t> count(bins, 0);
    for (double x : v) {
      auto b = static_cast<std::size_t>((x - s.min) / width);
      ++count[std::min(b, bins - 1)];
    }
    const auto top = static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin());
    s.mode = s.min + (static_cast<double>(top) + 0.5) * width;
  }
  return s;
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    // small-x form: P(K <= x) = sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2))
    const double pi = 3.14159265358979323846;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double t = (2.0 * k - 1.0);
      cdf += std::exp(-t * t * pi * pi / (8.0 * x * x));
    }
    return 1.0 - std::sqrt(2.0 * pi) / x * cdf;
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ValidationError("KS test needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.d = d;
  r.p = kolmogorov_survival(std::sqrt(na * nb / (na + nb)) * d);
  return r;
}

ProximityNetwork adaptive_threshold(const ProximityNetwork& empirical, const ProximityNetwork& simulated) {
  const auto pe = empirical.size();
  double pairs = 0, zeros = 0;
  for (Eigen::Index i = 0; i < pe; ++i)
    for (Eigen::Index j = i + 1; j < pe; ++j) {
      pairs += 1;
      if (!(empirical.phi(i, j) > 0.0)) zeros += 1;
    }
  const double q = pairs > 0 ? zeros / pairs : 0.0;

  struct Edge {
    double w;
    Eigen::Index i, j;
  };
  std::vector<Edge> edges;
  const auto ps = simulated.size();
  for (Eigen::Index i = 0; i < ps; ++i)
    for (Eigen::Index j = i + 1; j < ps; ++j)
      if (simulated.phi(i, j) > 0.0) edges.push_back({simulated.phi(i, j), i, j});
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });
  const auto drop = static_cast<std::size_t>(std::llround(q * static_cast<double>(edges.size())));
  ProximityNetwork out = simulated;
  for (std::size_t e = 0; e < drop && e < edges.size(); ++e) {
    out.phi(edges[e].i, edges[e].j) = 0.0;
    out.phi(edges[e].j, edges[e].i) = 0.0;
  }
  return out;
}

double pearson(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("pearson needs equal lengths >= 2");
  if (x.maxCoeff() == x.minCoeff() || y.maxCoeff() == y.minCoeff())
    throw ValidationError("pearson undefined for constant input");
  return pearson_unchecked(x, y);
}

double dpci_proximity_correlation(const ProximityNetwork& net, const Vector& pci) {
  if (pci.size() != net.size()) throw ValidationError("pci not aligned with network");
  std::vector<double> dx, w;
  for (Eigen::Index i = 0; i < net.size(); ++i)
    for (Eigen::Index j = i + 1; j < net.size(); ++j)
      if (net.phi(i, j) > 0.0) {
        dx.push_back(std::abs(pci(i) - pci(j)));
        w.push_back(net.phi(i, j));
      }
  return pearson(Eigen::Map<Vector>(dx.data(), static_cast<Eigen::Index>(dx.size())),
                 Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
}

NetworkReport network_report(const ProximityNetwork& net, const Vector& pci, std::uint64_t seed) {
  NetworkReport r;
  r.nodes = net.size();
  r.density = graph_density(net);
  r.transitivity = transitivity(net);
  const auto part = leiden_partition(net, seed);
  r.leiden_modularity = modularity(net, part);
  r.leiden_communities = part.empty() ? 0 : *std::max_element(part.begin(), part.end()) + 1;
  const auto scan = scan_pci_bins(net, pci);
  r.pci_modularity = scan.best_q;
  r.pci_best_bins = scan.best_n;
  const Vector cent = eigenvector_centrality(net);
  r.pci_centrality_r = pearson(pci, cent);
  r.dpci_proximity_r = dpci_proximity_correlation(net, pci);
  const auto w = edge_weights(net);
  if (!w.empty()) r.weights = summary_stats(w);
  const Vector deg = degrees(net);
  r.degrees = summary_stats(std::vector<double>(deg.data(), deg.data() + deg.size()));
  r.centrality = summary_stats(std::vector<double>(cent.data(), cent.data() + cent.size()));
  return r;
}

}  // namespace capspace::space
