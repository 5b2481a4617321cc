#pragma once

#include <span>
#include <string>
#include <vector>

#include "mcf/capacitated.hpp"
#include "mcf/config.hpp"
#include "mcf/graph.hpp"
#include "mcf/kvec.hpp"
#include "mcf/report.hpp"
#include "mcf/types.hpp"

namespace mcf {

struct ConcurrentOutcome {
  SolveStatus status = SolveStatus::fail;
  MultiFlow flow;                   // average over outer iterations
  double max_rel_congestion = 0.0;  // max_e ||f(e)||_1 / u(e)
  long iterations = 0;
  SolveReport report;
};

// Per-edge matrix-MWU state: S accumulates the update matrices M^(t),
// W = exp(-eps1' S) is recomputed from S every iteration.
struct MmwEdgeState {
  std::vector<double> s;  // k x k symmetric accumulator
  std::vector<double> w;  // k x k, exp(-eps1' s)
  int k = 0;

  explicit MmwEdgeState(int k_);
};

struct MmwDefaults {
  double rho = 0.0;
  double eps1 = 0.0;
  double eps1_prime = 0.0;
  double iterations = 0.0;
};

// rho = sqrt(k/eps), eps1 = eps/(k rho), eps1' = -ln(1-eps1),
// N = rho * eps1'^-2 * log k (log of max(k,2); log 1 = 0 would stall).
MmwDefaults mmw_paper_defaults(int k, double eps);

// P(e) = (1/u^2) (W(e)/maxdiag(W(e)) + eps I); condition at most 2k/eps.
std::vector<double> build_energy_from_w(std::span<const double> w_block, int k, double u,
                                        double eps);

// One Update step; i = argmax diagonal of W (ties to the lowest index).
// Returns the eigenvalue range of the update matrix M for width monitoring.
std::pair<double, double> mmw_update(MmwEdgeState& state, std::span<const double> f_block,
                                     double u, double eps, double rho, double eps1_prime);

// Algorithm for minimizing L1 congestion: matrix multiplicative weights over
// per-edge energy matrices, the capacitated solver as oracle.
ConcurrentOutcome max_concurrent_flow(const Instance& inst, double eps,
                                      const SolverOptions& opts = {}, TraceSink* sink = nullptr);

struct LambdaSearchResult {
  double lambda = 0.0;  // largest demand scale for which the solve succeeded
  MultiFlow flow;       // flow achieving it
  bool feasible = false;
  long probes = 0;
  std::string diagnostic;
};

// Multiplicative bisection over demand scalings, bracketed by
// bottleneck_bounds; a probe succeeds when the outer solver returns a flow
// with per-edge congestion at most (1 + 3 eps).
LambdaSearchResult binary_search_lambda(const Instance& inst, double eps,
                                        const SolverOptions& opts = {}, TraceSink* sink = nullptr);

// Instance with every commodity value multiplied by lambda.
Instance scale_instance_demands(const Instance& inst, double lambda);

}  // namespace mcf
