#pragma once

// CMA-ES tuning of the six block parameters against an empirical Product
// Space, plus the empirical-vs-simulated comparison and sensitivity sweeps.

#include "capspace/capability_model.hpp"
#include "capspace/product_space.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace capspace::calib {

// ---------------------------------------------------------------------------
// Generic CMA-ES on a box

struct CmaOptions {
  int population = 20;
  int generations = 50;
  double sigma0 = 0.3;  // in units of the box width
  std::uint64_t seed = 1;
};

/// Objective receives the candidate in original coordinates plus its
/// (generation, index) so it can derive its own seed. Generation 0, index 0
/// is the initial mean.
using Objective = std::function<double(const Vector& x, int generation, int index)>;

struct CmaResult {
  Vector best_x;
  double best_f = 0.0;
  int best_generation = 0;
  int best_index = 0;
  std::vector<double> trace;  // best-so-far after each generation; trace[0] is the initial mean
  Vector final_mean;
  double final_sigma = 0.0;
  int evaluations = 0;
};

CmaResult cma_es(const Objective& f, const Vector& lower, const Vector& upper, const Vector& x0,
                 const CmaOptions& opt = {});

// ---------------------------------------------------------------------------
// Block-parameter calibration

struct ModelConfig {
  int n_products = 1000;
  int cap_max = 100;
  int block_size = 25;
  model::SpaceMode mode = model::SpaceMode::Constant;
  double kappa = 1000.0;
};

struct CalibrationConfig {
  std::array<double, 6> lower{0.01, 0.8, 0.01, 0.01, 0.8, 0.01};
  std::array<double, 6> upper{0.1, 0.99, 0.1, 0.1, 0.99, 0.1};
  model::BlockParams initial{};
  CmaOptions cma{};
  ModelConfig model{};
  bool compare = true;  // build the comparison report for the best parameters
};

void validate(const CalibrationConfig& cfg);

/// Swaps phi_b and phi_w of a block type when they are out of order.
/// Returns the number of swaps made.
int repair(model::BlockParams& p);

struct ComparisonReport {
  space::NetworkReport empirical;
  space::NetworkReport simulated;
  space::KsResult weight_ks, degree_ks, centrality_ks;
  double dropped_fraction = 0.0;  // share of simulated edges removed by thresholding
};

struct CalibrationResult {
  model::BlockParams best;
  double best_d = 0.0;
  std::vector<double> trace;
  CmaResult cma;
  int repairs = 0;
  std::vector<std::string> log;
  double sigma0 = 0.0;
  bool has_report = false;
  ComparisonReport report;
};

/// Simulated Product Space for a parameter vector; the seed drives both the
/// capability space draw and the catalog.
space::ProximityNetwork simulate_network(const model::GmmFit& gmm, const model::BlockParams& params,
                                         const ModelConfig& mc, std::uint64_t seed);

/// KS distance between sorted empirical edge weights and the positive
/// weights of the simulated network.
double weight_ks_distance(const std::vector<double>& sorted_empirical, const space::ProximityNetwork& simulated);

/// gmm must be fitted on the empirical PCI (its data range drives the scaling).
CalibrationResult calibrate_block_params(const space::ProximityNetwork& empirical, const model::GmmFit& gmm,
                                         const CalibrationConfig& cfg);

/// Comparison after adaptive thresholding of the simulated network.
ComparisonReport compare_networks(const space::ProximityNetwork& empirical, const space::ProximityNetwork& simulated,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sensitivity sweeps

struct SweepPoint {
  std::string label;
  model::BlockParams params;
  double ks_d = 0.0;
  bool has_report = false;
  ComparisonReport report;
};

/// kappa sweep in Beta mode with the parameters held fixed.
std::vector<SweepPoint> sweep_kappa(const space::ProximityNetwork& empirical, const model::GmmFit& gmm,
                                    const model::BlockParams& params, const ModelConfig& mc,
                                    const std::vector<double>& kappas, std::uint64_t seed, bool compare);

/// n sweep: refit the mixture with n components on the empirical PCI, keep
/// n * block_size equal to the reference total, and re-tune from a warm start.
std::vector<SweepPoint> sweep_components(const space::ProximityNetwork& empirical, const CalibrationConfig& cfg,
                                         const std::vector<int>& ns, int total_capabilities);

}  // namespace capspace::calib
