#pragma once

#include <string>
#include <vector>

#include "mcf/capacitated.hpp"
#include "mcf/concurrent_mmw.hpp"
#include "mcf/config.hpp"
#include "mcf/graph.hpp"
#include "mcf/kvec.hpp"
#include "mcf/lapsolve.hpp"
#include "mcf/report.hpp"
#include "mcf/types.hpp"

namespace mcf {

struct WeightedSpec {
  Instance instance;
  std::vector<double> weights;  // per-commodity, >= 0, at least one positive
};

// Column i is commodity i's demand vector embedded in the (vertex, commodity)
// space; the kn x k matrix D of Appendix B.
using DemandMatrix = std::vector<DemandVector>;

// Demand columns of the instance, commodity i scaled by factors[i].
DemandMatrix demand_columns(const Instance& inst, std::span<const double> factors);

struct WeightedCoupledResult {
  VertexPotentials potentials;      // phi = L+ D F
  MultiFlow flow;                   // conservation-repaired
  std::vector<double> flow_values;  // F, sums to 1
  double lambda = 0.0;              // 1 / (1^T (D^T L+ D)+ 1), the optimal energy
  double energy = 0.0;              // flow^T P flow
  SolveReport report;
};

// The free-flow-value coupled subproblem: minimize f^T P f subject to
// Gamma^T f = D F and 1^T F = 1, by k coupled solves and a k x k
// pseudo-inverse.
WeightedCoupledResult weighted_coupled_flow(const Graph& g, const EnergyMatrices& p,
                                            const DemandMatrix& d, double delta,
                                            const SolverOptions& opts = {});

struct WeightedOutcome {
  bool feasible = false;
  double objective = 0.0;           // sum_i weights[i] * F_i at original scale
  MultiFlow flow;
  std::vector<double> flow_values;  // original-scale F_i per commodity
  double max_rel_congestion = 0.0;
  long probes = 0;
  std::string diagnostic;
};

// Maximum weighted multicommodity flow: binary search on the objective
// normalization around the concurrent stack, with weighted_coupled_flow as
// the innermost oracle.
WeightedOutcome max_weighted_flow(const WeightedSpec& spec, double eps,
                                  const SolverOptions& opts = {}, TraceSink* sink = nullptr);

}  // namespace mcf
