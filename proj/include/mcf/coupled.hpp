#pragma once

#include <vector>

#include "mcf/config.hpp"
#include "mcf/graph.hpp"
#include "mcf/kvec.hpp"
#include "mcf/lapsolve.hpp"
#include "mcf/types.hpp"

namespace mcf {

struct CoupledResult {
  VertexPotentials potentials;  // scaled so the potential energy is 1
  MultiFlow flow;               // conservation repaired per commodity
  double energy = 0.0;          // flow^T P flow
  double scale = 0.0;           // sqrt(phi_unscaled^T L phi_unscaled)
  SolveReport report;
};

// Minimum-energy coupled flow oracle. Requires the caller-normalized
// I <= P(e) <= U*I and per-block condition at most kappa. On success the
// flow meets the demands exactly, its energy is within (1+delta) of optimal,
// and the potentials are feasible for the dual with objective close to the
// optimum.
CoupledResult quadratically_coupled_flow(const Graph& g, const EnergyMatrices& p,
                                         const DemandVector& d, double delta, double u_bound,
                                         double kappa, const SolverOptions& opts = {});

// Reroutes the conservation defect of a single-commodity flow along a BFS
// spanning tree so that Gamma^T f = d exactly; per-edge change is at most
// m * ||Gamma^T f - d||_inf.
std::vector<double> make_kirchhoff(const Graph& g, std::span<const double> demand,
                                   std::span<const double> flow);

}  // namespace mcf
