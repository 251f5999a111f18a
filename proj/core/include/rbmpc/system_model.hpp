#pragma once

#include <utility>
#include <vector>

#include "rbmpc/types.hpp"

namespace rbmpc {

// The LQ data (A, B, Q, W, F) plus the initial state.
struct LqProblem {
  SpMat A;   // n x n generator
  Matrix B;  // n x m input map
  SpMat Q;   // n x n state weight, symmetric PSD
  Matrix W;  // m x m control weight, symmetric PD
  SpMat F;   // n x n terminal weight, symmetric PSD
  Vector x0;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  // Dimension and cone checks (PSD within 1e-10 relative, W strictly PD).
  void validate() const;
};

struct Subset {
  std::vector<int> members;  // 0-based indices into the parts list
  double probability = 0.0;
};

// Operator splitting A = sum_m A_m together with the sparse list of subsets
// that carry positive probability, and the derived quantities the error
// estimates depend on.
struct Splitting {
  std::vector<SpMat> parts;
  std::vector<Subset> subsets;
  Vector pis;              // inclusion probability per part
  double variance = 0.0;   // probability-weighted squared spectral deviation
  double mu_r = 0.0;       // quasi-dissipativity bound, clamped at 0
  SpMat sum;               // sum of all parts

  int part_count() const { return static_cast<int>(parts.size()); }
  int subset_count() const { return static_cast<int>(subsets.size()); }
  int dimension() const { return parts.empty() ? 0 : static_cast<int>(parts[0].rows()); }

  // Randomized generator piece sum_{m in S} A_m / pi_m for a listed subset.
  SpMat assemble(int subset_index) const;

  bool is_full_batch() const;

  // Cumulative probabilities for inverse-CDF sampling.
  const std::vector<double>& cumulative() const { return cumulative_; }

  std::vector<double> cumulative_;
};

// Validates the scheme, computes pi_m, Var[A_R] and mu_R.
Splitting build_splitting(std::vector<SpMat> parts, std::vector<Subset> subsets);

// Single-subset splitting {1..M} with probability 1 (A_R == A).
Splitting full_batch_splitting(const SpMat& A);

// Circulant heat-ring example: kappa-scaled second-difference matrix on a
// ring (kappa defaults to the grid factor (n-1)^2), B actuating the first
// (n-1)/10 nodes, Q = I/(n-1), W = [1], F = 0, x0 = ones, split into n
// pairwise interconnection matrices with all size-(n-1) subsets at
// probability 1/n.
std::pair<LqProblem, Splitting> heat_ring_example(int n);
std::pair<LqProblem, Splitting> heat_ring_example(int n, double kappa);

// Largest singular value. Dense path uses SVD; large sparse matrices use
// power iteration on M^T M with a deterministic start vector.
double spectral_norm(const Matrix& M);
double spectral_norm(const SpMat& M);

// Largest eigenvalue of the symmetric part of G. For large sparse G an exact
// negative-semidefiniteness certificate (sparse LDLT) is tried first so the
// common dissipative case stays O(nnz).
double max_symmetric_eigenvalue(const SpMat& G);

}  // namespace rbmpc
