#pragma once

// Product proximity network and the topology statistics computed on it.

#include "capspace/common.hpp"
#include "capspace/trade_ingest.hpp"

#include <optional>
#include <string>
#include <vector>

namespace capspace::space {

/// Symmetric proximity matrix. The diagonal is stored as 0 and never counts
/// as an edge; zero off-diagonal entries are absent edges.
struct ProximityNetwork {
  Matrix phi;
  std::vector<std::string> products;
  std::optional<Vector> pci;

  Eigen::Index size() const { return phi.rows(); }
};

/// Community id per node, contiguous from 0.
using Partition = std::vector<int>;

enum class ModeMethod { ExactCount, Histogram };

struct DistributionSummary {
  std::size_t n = 0;
  double mean = 0, median = 0, mode = 0, iqr = 0, skew = 0, kurtosis = 0, min = 0, max = 0;
  ModeMethod mode_method = ModeMethod::ExactCount;
};

struct KsResult {
  double d = 0.0;
  double p = 1.0;
};

struct PciBinScan {
  int best_n = 1;
  double best_q = 0.0;
  std::vector<double> q_by_n;  // q_by_n[n-1]
};

struct NetworkReport {
  Eigen::Index nodes = 0;
  double density = 0, transitivity = 0;
  double leiden_modularity = 0;
  int leiden_communities = 0;
  double pci_modularity = 0;
  int pci_best_bins = 0;
  double pci_centrality_r = 0;
  double dpci_proximity_r = 0;
  DistributionSummary weights, degrees, centrality;
};

ProximityNetwork proximity_matrix(const trade::SpecializationMatrix& s);

/// omega = D^-1 M Phi, countries x products.
Matrix density_omega(const trade::SpecializationMatrix& s, const ProximityNetwork& net);

double graph_density(const ProximityNetwork& net);

/// Global clustering coefficient of the unweighted skeleton.
double transitivity(const ProximityNetwork& net);

double modularity(const ProximityNetwork& net, const Partition& part);

struct LeidenOptions {
  double resolution = 1.0;
  double theta = 0.01;   // refinement randomness
  int max_iterations = 10;
};

Partition leiden_partition(const ProximityNetwork& net, std::uint64_t seed, const LeidenOptions& opt = {});

/// Equal-width bins over [min, max]; empty bins are skipped when numbering.
Partition pci_bin_partition(const Vector& pci, int n_bins);

/// Modularity of pci_bin_partition for n = 1..max_bins; keeps the first maximum.
PciBinScan scan_pci_bins(const ProximityNetwork& net, const Vector& pci, int max_bins = 20);

/// Leading eigenvector of phi, non-negative, max entry 1.
Vector eigenvector_centrality(const ProximityNetwork& net, double tol = 1e-10, int max_iter = 10000);

/// Number of positive off-diagonal entries per node.
Vector degrees(const ProximityNetwork& net);

/// Positive weights of unordered pairs i<j, row-major.
std::vector<double> edge_weights(const ProximityNetwork& net);

DistributionSummary summary_stats(const std::vector<double>& values);

/// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Drops the lowest simulated edges so the simulated network loses the same
/// fraction of pairs that is absent in the empirical one.
ProximityNetwork adaptive_threshold(const ProximityNetwork& empirical, const ProximityNetwork& simulated);

double pearson(const Vector& x, const Vector& y);

/// Pearson R between |pci_i - pci_j| and phi_ij over pairs with phi > 0.
double dpci_proximity_correlation(const ProximityNetwork& net, const Vector& pci);

NetworkReport network_report(const ProximityNetwork& net, const Vector& pci, std::uint64_t seed);

}  // namespace capspace::space
