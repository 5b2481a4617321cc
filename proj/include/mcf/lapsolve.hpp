#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mcf/config.hpp"
#include "mcf/graph.hpp"
#include "mcf/kvec.hpp"
#include "mcf/types.hpp"

namespace mcf {

// Provenance of one linear solve: iteration counts, the residual actually
// reached, and whether the tolerance contract was met before the cap.
struct SolveReport {
  long iterations = 0;
  double relative_residual = 0.0;
  long preconditioner_solves = 0;
  bool converged = true;
  double theta = 0.0;          // requested tolerance
  double epsilon_solve = 0.0;  // tolerance the caller derived (before flooring)

  void merge(const SolveReport& r) {
    iterations += r.iterations;
    preconditioner_solves += r.preconditioner_solves;
    relative_residual = std::max(relative_residual, r.relative_residual);
    converged = converged && r.converged;
  }
};

// Weighted graph Laplacian Gamma^T diag(w) Gamma held in operator form,
// with a BFS spanning tree for the tree preconditioner / exact tree solves.
struct ScalarLaplacian {
  int n = 0;
  std::vector<int> tails, heads;
  std::vector<double> weights;
  std::vector<double> diag;       // weighted degrees
  std::vector<int> bfs_order;     // root first
  std::vector<int> parent;        // parent vertex, -1 at root
  std::vector<int> parent_edge;   // edge id to parent, -1 at root

  ScalarLaplacian() = default;
  ScalarLaplacian(const Graph& g, std::span<const double> edge_weights);

  std::vector<double> apply(std::span<const double> x) const;
  // Exact solve of the spanning-tree Laplacian restricted to tree edges;
  // result is mean-centered. Assumes sum(b) = 0.
  std::vector<double> tree_solve(std::span<const double> b) const;
};

// Preconditioned CG solve of lap * x = b to ||lap x - b||_2 <= tol ||b||_2,
// mean-zero output. Requires sum(b) ~= 0 and a connected graph; throws
// NumericError past the iteration cap.
std::vector<double> laplacian_solve(const ScalarLaplacian& lap, std::span<const double> b,
                                    double tol, LapPreconKind precon = LapPreconKind::jacobi,
                                    SolveReport* report = nullptr);

// The implicit operator L = Gamma_global^T P^-1 Gamma_global, applied
// edge-blockwise; never assembled. Immutable once built.
struct CoupledOperator {
  Graph graph;
  EnergyMatrices p;
  std::vector<double> inv_blocks;  // per-edge P(e)^-1, row-major

  CoupledOperator(const Graph& g, const EnergyMatrices& p_);

  int k() const { return p.k; }
  int dim() const { return graph.n * p.k; }
  std::vector<double> apply(std::span<const double> x) const;
};

// Block-diagonal preconditioner of the coupled operator: k copies of the
// scalar Laplacian with edge weights 1 / lambda_min(P(e)). Because the
// coupled operator carries P^-1, the order flips under inversion and the
// sandwich reads L <= Ltilde <= kappa * L.
struct BlockPreconditioner {
  int k = 0;
  ScalarLaplacian lap;

  // Applies an approximation of Ltilde^+ (k inner Laplacian solves).
  std::vector<double> apply_inverse(std::span<const double> b, double lap_tol,
                                    LapPreconKind precon, long* solve_count = nullptr) const;
};

BlockPreconditioner build_preconditioner(const Graph& g, const EnergyMatrices& p);

// Removes the per-commodity constant component (the null space of L).
void project_out_commodity_constants(std::span<double> x, int k, int n);

// Preconditioned Chebyshev iteration for L x = b assuming the preconditioned
// spectrum lies in [1, 2*kappa]. Guarantees ||x - L+ b||_L <= theta ||L+ b||_L
// on convergence; a report with converged=false is returned past the cap.
std::pair<std::vector<double>, SolveReport> precon_cheby(const CoupledOperator& op,
                                                         const BlockPreconditioner& pre,
                                                         std::span<const double> b, double kappa,
                                                         double theta,
                                                         const SolverOptions& opts = {});

// Same contract via preconditioned CG (config-selected alternative).
std::pair<std::vector<double>, SolveReport> precon_cg(const CoupledOperator& op,
                                                      const BlockPreconditioner& pre,
                                                      std::span<const double> b, double kappa,
                                                      double theta, const SolverOptions& opts = {});

// Finds potentials phi with ||phi - phi*||_L <= delta ||phi*||_L where
// L phi* = d, by the configured outer iteration.
std::pair<VertexPotentials, SolveReport> solve_coupled_system(const Graph& g,
                                                              const EnergyMatrices& p,
                                                              const DemandVector& d, double delta,
                                                              const SolverOptions& opts = {});

// Dense direct solve of L phi = d (eigendecomposition pseudo-inverse); the
// paper-faithful fallback when the tolerance formula underflows, n <= 50.
VertexPotentials solve_coupled_dense(const Graph& g, const EnergyMatrices& p,
                                     const DemandVector& d);

}  // namespace mcf
