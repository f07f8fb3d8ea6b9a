#pragma once

// Inference of a country's capability set and CES parameters from its export
// basket: KDE target over PCI, KL objective, simulated annealing, rho/nu grid.

#include "capspace/capability_model.hpp"

#include <string>
#include <vector>

namespace capspace::infer {

using model::CapabilitySet;

struct Bandwidth {
  double h = 0.0;
  bool fallback = false;  // Silverman used instead of ISJ
  std::string warning;
};

/// Silverman's 1.06 sigma n^-1/5 with the Kish effective size for weights.
double silverman_bandwidth(const std::vector<double>& x, const std::vector<double>& w = {});

/// Improved Sheather-Jones bandwidth on a 2^12 grid. Weights are optional.
Bandwidth isj_bandwidth(const std::vector<double>& x, const std::vector<double>& w = {});

struct KdeModel {
  std::vector<double> points;
  std::vector<double> weights;  // sum to 1
  double h = 0.0;
  bool fallback = false;
  std::string warning;

  double density(double x) const;
};

KdeModel fit_kde(const std::vector<double>& points, const std::vector<double>& weights);

inline constexpr double kEps = 1e-10;

/// KDE of PCI weighted by export share, evaluated at each product's k_scaled,
/// clipped at kEps and renormalised.
Vector target_vector(const Vector& exports, const Vector& pci, const model::ProductCatalog& catalog,
                     KdeModel* kde = nullptr);

/// Both inputs are clipped to [kEps, 1] and renormalised first.
double kl_divergence(const Vector& p, const Vector& q);

struct AnnealSchedule {
  int iterations = 100;
  double t0 = 1.0;
  double cooling = 0.95;
  int restarts = 5;
  double flip_scale = 3.0;  // flips per step = round(flip_scale * T)
  bool greedy = false;      // accept only strict improvements
};

void validate(const AnnealSchedule& s);

struct AnnealResult {
  CapabilitySet set;
  double kl = 0.0;
  double warm_kl = 0.0;
  std::vector<double> restart_kl;
  std::vector<double> trace;  // current KL after each step of the winning restart
  int accepted = 0;
  int rejected_empty = 0;
  double mean_uphill_acceptance = 0.0;  // mean exp(delta/T) over worsening proposals
};

/// Flip weights: mean proximity to the set for non-members, one minus it for
/// members, 0.5 for a lone member.
Vector flip_weights(const model::CapabilitySpace& space, const CapabilitySet& set);

/// Capability set of the catalog product with the largest target entry.
CapabilitySet default_warm_start(const model::ProductCatalog& catalog, const Vector& target);

/// KL(target || export shares of set); +inf when the set yields no output.
double set_kl(const model::CapabilitySpace& space, const model::ProductCatalog& catalog, const Vector& target,
              const CapabilitySet& set, double rho, double nu);

AnnealResult anneal_capabilities(const model::CapabilitySpace& space, const model::ProductCatalog& catalog,
                                 const Vector& target, double rho, double nu, const CapabilitySet& warm_start,
                                 const AnnealSchedule& schedule, std::uint64_t seed);

struct Clarity {
  double ratio = 0.0;    // KL(target||pred) / KL(target||uniform)
  double clarity = 0.0;  // 1 - ratio
  bool defined = true;
};

Clarity clarity(const Vector& target, const Vector& predicted);

struct InferenceOptions {
  std::vector<double> rho_grid{1.0, 0.0, -3.0, -9.0, model::kRhoLeontief};
  std::vector<double> nu_grid{0.5, 1.0, 2.0, 3.0, 4.0};
  AnnealSchedule schedule{};
  bool fit_rho_nu = true;  // false: rho = nu = 1
};

struct InferenceResult {
  CapabilitySet set;
  double kl = 0.0;
  double warm_kl = 0.0;
  Clarity clarity;
  double rho = 1.0;
  double nu = 1.0;
  int k0 = 0;
  double k1 = 0.0;
  int k1_skipped = 0;
  std::vector<double> stage1_kl;  // per rho_grid entry
  std::vector<double> stage2_kl;  // per nu_grid entry
};

InferenceResult optimize_rho_nu(const model::CapabilitySpace& space, const model::ProductCatalog& catalog,
                                const Vector& target, const InferenceOptions& opt, std::uint64_t seed);

}  // namespace capspace::infer
