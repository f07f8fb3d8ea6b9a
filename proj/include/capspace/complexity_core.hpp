#pragma once

// Economic Complexity Index / Product Complexity Index.
//
// Both are second eigenvectors of the row-stochastic matrices
//   M~ = D^-1 M U^-1 M^T   (countries)
//   M^ = U^-1 M^T D^-1 M   (products)
// where D, U are the diagonal diversity and ubiquity matrices. M~ is similar
// to the symmetric PSD matrix D^-1/2 M U^-1 M^T D^-1/2, whose top eigenvector
// is sqrt(diversity) with eigenvalue 1; we iterate on that symmetric form with
// the top eigenvector projected out.

#include "capspace/common.hpp"
#include "capspace/trade_ingest.hpp"

#include <string>
#include <vector>

namespace capspace::complexity {

using trade::SpecializationMatrix;

struct ReflectionState {
  int iteration = 0;
  Vector k_c;
  Vector k_p;
};

enum class SignOrientation { DiversityPositive };

struct EigenOptions {
  double tol = 1e-12;       // residual ||A x - lambda x|| for the unit Ritz vector
  int max_iter = 10000;
  int block = 8;            // subspace width (clipped to dim - 1)
  std::uint64_t seed = 0x5eed;
};

struct ComplexityResult {
  Vector eci;  // z-scored (population sd), diversity-positive
  Vector pci;  // z-scored, aligned with the mean ECI of each product's exporters
  Vector eci_eigenvector;  // unscaled right eigenvector of M~, unit norm
  Vector pci_eigenvector;  // unscaled right eigenvector of M^, unit norm
  double second_eigenvalue_c = 0.0;
  double second_eigenvalue_p = 0.0;
  double third_eigenvalue_c = 0.0;
  double residual_c = 0.0;
  double residual_p = 0.0;
  int iterations_c = 0;
  int iterations_p = 0;
  SignOrientation sign_orientation = SignOrientation::DiversityPositive;
  bool degenerate = false;  // second eigenvalue has multiplicity > 1 (within 1e-9)
  bool converged = true;
  std::vector<std::string> warnings;
};

/// D^-1 M U^-1 M^T. Requires a pruned matrix.
Matrix m_tilde(const SpecializationMatrix& s);
/// U^-1 M^T D^-1 M. Requires a pruned matrix.
Matrix m_hat(const SpecializationMatrix& s);

/// Alternating averages starting from (diversity, ubiquity).
ReflectionState method_of_reflections(const SpecializationMatrix& s, int n_iter);

ComplexityResult eci_pci(const SpecializationMatrix& s, const EigenOptions& opt = {});

/// Connected components of the country-product bipartite graph.
int bipartite_components(const SpecializationMatrix& s);

/// (x - mean) / population sd; all-zero output for constant input.
Vector zscore(const Vector& x);

}  // namespace capspace::complexity
