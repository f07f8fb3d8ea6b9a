#pragma once

// Generative capability model: a Gaussian mixture over PCI defines blocks of a
// capability relatedness matrix; products are capability sets grown by
// preferential attachment inside that matrix; countries produce products
// through a CES aggregate of their relatedness to each required capability.

#include "capspace/common.hpp"
#include "capspace/product_space.hpp"

#include <array>
#include <limits>
#include <string>
#include <vector>

namespace capspace::model {

// ---------------------------------------------------------------------------
// Gaussian mixture

struct GmmFit {
  int n = 0;
  std::vector<double> weights, means, sds;
  double log_likelihood = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Log-likelihood after every EM step of the winning restart.
  std::vector<double> ll_trace;
  /// Range of the data the mixture was fitted on (PCI_min, PCI_max).
  double data_min = 0.0;
  double data_max = 0.0;
  double data_mean = 0.0;

  double mean() const;
  double pdf(double x) const;
  double cdf(double x) const;
};

struct GmmOptions {
  double tol = 1e-8;  // on the mean per-sample log-likelihood
  int max_iter = 500;
  int restarts = 5;
  double min_sd = 1e-6;
};

GmmFit fit_gmm(const std::vector<double>& values, int n, std::uint64_t seed, const GmmOptions& opt = {});

struct AicSelection {
  int best_n = 1;
  std::vector<GmmFit> fits;  // fits[n-1]
};

AicSelection select_n_by_aic(const std::vector<double>& values, int n_max, std::uint64_t seed,
                             const GmmOptions& opt = {});

/// One-sample KS of values against the mixture CDF (asymptotic p).
space::KsResult gmm_ks_test(const GmmFit& fit, std::vector<double> values);

// ---------------------------------------------------------------------------
// Capability space

enum class BlockType { Periphery, Core };
enum class SpaceMode { Constant, Beta };

struct Block {
  BlockType type = BlockType::Periphery;
  int begin = 0;  // capability index range [begin, end)
  int end = 0;
  int component = 0;  // index into the GmmFit arrays
};

struct BlockLayout {
  std::vector<Block> blocks;  // ascending component mean, periphery first
  int n_capabilities = 0;
  int n_periphery = 0;
  int n_core = 0;

  int block_of(int capability) const;
};

/// The six block-level relatedness values.
struct BlockParams {
  double pb = 0.05;  // periphery <-> periphery, different blocks
  double pw = 0.9;   // within a periphery block
  double pc = 0.05;  // periphery row -> core column
  double cb = 0.05;  // core <-> core, different blocks
  double cw = 0.9;   // within a core block
  double cp = 0.05;  // core row -> periphery column

  std::array<double, 6> to_array() const { return {pb, pw, pc, cb, cw, cp}; }
  static BlockParams from_array(const std::array<double, 6>& a) { return {a[0], a[1], a[2], a[3], a[4], a[5]}; }
  static const std::array<const char*, 6>& names();
};

void validate(const BlockParams& p);

struct CapabilitySpace {
  Matrix phi;  // N_a x N_a, diagonal 1
  BlockLayout layout;
  BlockParams params;
  SpaceMode mode = SpaceMode::Constant;
  double kappa = 1000.0;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(phi.rows()); }
};

/// Block-mean matrix mu_ij implied by the layout and parameters.
Matrix block_means(const BlockLayout& layout, const BlockParams& p);

BlockLayout make_layout(const GmmFit& gmm, double pci_mean, int block_size);

CapabilitySpace build_capability_space(const GmmFit& gmm, double pci_mean, const BlockParams& params,
                                       int block_size, SpaceMode mode, double kappa, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Products

using CapabilitySet = std::vector<int>;  // sorted, distinct

struct Product {
  CapabilitySet capabilities;
  int k0 = 0;
  double k_scaled = 0.0;
  int origin_block = 0;
};

struct ProductCatalog {
  std::vector<Product> products;  // ascending k0
  GmmFit gmm;
  int k_min = 0, k_max = 0;
  double pci_min = 0.0, pci_max = 0.0;

  std::size_t size() const { return products.size(); }
};

/// Integer capability count for a PCI-unit draw g.
int capability_count(double g, double pci_min, double pci_max, int cap_max, int n_capabilities);

/// Attachment probabilities over all capabilities given the current set
/// (zero for members). Sums to 1.
Vector attachment_probabilities(const CapabilitySpace& space, const CapabilitySet& current);

Product generate_product(const CapabilitySpace& space, const GmmFit& gmm, int cap_max, std::uint64_t seed);

ProductCatalog generate_catalog(const CapabilitySpace& space, const GmmFit& gmm, int n_products, int cap_max,
                                std::uint64_t seed);

/// K' = PCI_min + (k0 - K_min)/(K_max - K_min) * (PCI_max - PCI_min); midpoint when K_min = K_max.
double scale_k0(int k0, int k_min, int k_max, double pci_min, double pci_max);

double set_proximity_avg(const CapabilitySpace& space, const CapabilitySet& a1, const CapabilitySet& a2);
double set_proximity_max_directed(const CapabilitySpace& space, const CapabilitySet& a1, const CapabilitySet& a2);
double set_proximity_max(const CapabilitySpace& space, const CapabilitySet& a1, const CapabilitySet& a2);

/// Product network with phi_ij = average of the two directed average proximities.
space::ProximityNetwork simulated_product_space(const ProductCatalog& catalog, const CapabilitySpace& space);

/// K_{a,1} per capability; NaN for capabilities no product uses.
Vector capability_k1(const ProductCatalog& catalog, int n_capabilities);

/// Mean K_{a,1} over the set, skipping unused capabilities. `skipped` counts them.
double set_k1(const ProductCatalog& catalog, const CapabilitySet& set, int n_capabilities, int* skipped = nullptr);
double set_k1(const Vector& k1, const CapabilitySet& set, int* skipped = nullptr);

// ---------------------------------------------------------------------------
// CES production

inline constexpr double kRhoLeontief = -std::numeric_limits<double>::infinity();

/// alpha * (mean x_i^rho)^(nu/rho) with the rho = 0 and rho = -inf limits.
double ces(const Vector& inputs, double rho, double nu, double alpha = 1.0);

/// r_a = mean over c in c_set of phi[c][a]: the relatedness of the country to each capability.
Vector country_relatedness(const CapabilitySpace& space, const CapabilitySet& c_set);

double ces_output(const CapabilitySpace& space, const CapabilitySet& c_set, const Product& product, double rho,
                  double nu, double alpha = 1.0);

/// Q for every catalog product given country relatedness r (alpha = 1).
Vector catalog_outputs(const Vector& r, const ProductCatalog& catalog, double rho, double nu);

Vector export_shares(const CapabilitySpace& space, const CapabilitySet& c_set, const ProductCatalog& catalog,
                     double rho, double nu);

}  // namespace capspace::model
