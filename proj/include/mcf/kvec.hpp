#pragma once

#include <span>
#include <vector>

#include "mcf/types.hpp"

namespace mcf {

// Dense symmetric matrices of small order (k x k blocks), row-major.
struct SymEig {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // column j (stride dim) is the j-th eigenvector
  int dim = 0;

  double vec(int row, int col) const { return vectors[static_cast<size_t>(row) * dim + col]; }
};

// Cyclic Jacobi eigensolver for symmetric matrices. Input asymmetry above
// 1e-10 (relative to the max entry) is an error; below that the matrix is
// symmetrized silently, absorbing float drift accumulated in S^(t).
SymEig sym_eig(std::span<const double> a, int dim);

// exp(A) for symmetric A via eigendecomposition: Q exp(diag) Q^T.
std::vector<double> matrix_exp_sym(std::span<const double> a, int dim);

// Per-edge symmetric positive-definite k x k energy blocks with cached
// extremal eigenvalues.
struct EnergyMatrices {
  int k = 0;
  int m = 0;
  std::vector<double> blocks;  // m * k * k, row-major per block
  std::vector<double> lambda_min;
  std::vector<double> lambda_max;

  EnergyMatrices() = default;
  // Validates symmetry and positive definiteness of every block.
  EnergyMatrices(int k_, int m_, std::vector<double> blocks_);

  static EnergyMatrices identity(int k, int m);
  // One scalar per edge: P(e) = w(e) * I.
  static EnergyMatrices scalar(int k, std::span<const double> edge_weights);

  std::span<const double> block(int e) const {
    return {blocks.data() + static_cast<size_t>(e) * k * k, static_cast<size_t>(k) * k};
  }
  double entry(int e, int i, int j) const {
    return blocks[static_cast<size_t>(e) * k * k + static_cast<size_t>(i) * k + j];
  }

  // Rebuilds the cached eigenvalue bounds (call after mutating blocks).
  void refresh_eigs();
};

// f^T P f, the total energy dissipation.
double energy(const EnergyMatrices& p, const MultiFlow& f);

// f(e)^T P(e) f(e) for one edge.
double energy_edge(const EnergyMatrices& p, int e, const MultiFlow& f);

// sqrt(f(e)^T P(e) f(e)).
double saturation(const EnergyMatrices& p, int e, const MultiFlow& f);

// ||f(e)||_1 / u.
double congestion_l1(const MultiFlow& f, int e, double u);

// max_e lambda_max(P(e)) / lambda_min(P(e)).
double block_condition_bound(const EnergyMatrices& p);

}  // namespace mcf
