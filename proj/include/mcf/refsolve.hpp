#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcf/concurrent_signs.hpp"
#include "mcf/graph.hpp"
#include "mcf/kvec.hpp"
#include "mcf/types.hpp"

// Verification oracles, written independently of the iterative solver path:
// dense eigendecomposition pseudo-inverses and a small two-phase simplex.
// Desk-scale budgets are enforced, not worked around.
namespace mcf::refsolve {

struct DenseCoupledResult {
  double energy = 0.0;  // d^T L^+ d
  MultiFlow flow;       // exact minimum-energy flow
};

// Exact (dense-arithmetic) optimum of the quadratically coupled flow
// problem; budget n*k <= 200.
DenseCoupledResult dense_coupled_oracle(const Graph& g, const EnergyMatrices& p,
                                        const DemandVector& d);

// Exact concurrent-flow optimum lambda* via LP (variables split f = f+ - f-,
// Bland's rule); budget m*k <= 200.
double lp_concurrent_oracle(const Instance& inst);

// Exact maximum of sum_i weights[i] * F_i subject to capacities.
double lp_weighted_oracle(const Instance& inst, std::span<const double> weights);

// Exhaustive subset-sum counting; k <= 20.
CountTable subset_sum_brute(std::span<const std::int64_t> a);

// The 2^k-term sign-energy matrix with exact weights exp((eps/rho) s^T f / u);
// k <= 12.
std::vector<double> exact_sign_energy(std::span<const double> f_block, double u, double rho,
                                      double eps);

// Dense symmetric pseudo-inverse applied to a vector (eigenvalue cutoff
// relative to lambda_max); exposed for test-side oracles.
std::vector<double> dense_pinv_apply(std::span<const double> sym, int dim,
                                     std::span<const double> rhs, double rel_cutoff = 1e-10);

// General-purpose small LP: maximize c^T x, s.t. rows, x >= 0.
struct LpRow {
  std::vector<double> coeffs;
  double rhs = 0.0;
  bool equality = false;  // false: <=
};

struct LpProblem {
  int nvars = 0;
  std::vector<double> objective;
  std::vector<LpRow> rows;
};

struct LpSolution {
  double value = 0.0;
  std::vector<double> x;
};

LpSolution lp_solve_max(const LpProblem& prob);

}  // namespace mcf::refsolve
