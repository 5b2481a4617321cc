#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcf/config.hpp"
#include "mcf/coupled.hpp"
#include "mcf/graph.hpp"
#include "mcf/kvec.hpp"
#include "mcf/report.hpp"
#include "mcf/types.hpp"

namespace mcf {

enum class SolveStatus { flow, fail };

struct CapacitatedOutcome {
  SolveStatus status = SolveStatus::fail;
  MultiFlow flow;                 // averaged accepted flows when status == flow
  double max_saturation = 0.0;    // w.r.t. the ORIGINAL energy matrices
  long accepted_iterations = 0;
  long total_iterations = 0;
  std::vector<char> accepted;     // acceptance mask per iteration (drivers
                                  // with side state average over these)
  SolveReport report;             // merged oracle reports
};

struct PaperDefaults {
  double rho = 0.0;
  double iterations = 0.0;
};

// rho = 10 m^(1/3) eps^(-2/3), N = 20 rho ln(m) eps^(-2).
PaperDefaults capacitated_paper_defaults(int m, double eps);

// Scalar-reweighed energy matrices P'(e) = (w(e) + (eps/m) mu) P(e);
// per-block condition numbers are unchanged.
EnergyMatrices reweigh(const EnergyMatrices& p, std::span<const double> w, double mu, double eps);

// Multiplicative update w'(e) = w(e) (1 + (eps/rho) saturation(e)).
std::vector<double> update_weights(std::span<const double> w, std::span<const double> saturations,
                                   double eps, double rho);

// Oracle signature: given reweighed (unnormalized) matrices and a tolerance,
// return a demand-satisfying flow of near-minimal energy. The default wraps
// quadratically_coupled_flow; the weighted driver substitutes its own.
using CoupledOracle = std::function<MultiFlow(const EnergyMatrices& reweighed, double delta)>;

// Multiplicative-weights loop minimizing maximum saturation. Returns either
// a flow with saturation at most 1 + 10 eps on every edge, or FAIL
// certifying that no flow with per-edge saturation below 1 - eps exists.
CapacitatedOutcome quadratically_capacitated_flow(const Graph& g, const EnergyMatrices& p,
                                                  const DemandVector& d, double eps,
                                                  const SolverOptions& opts = {},
                                                  TraceSink* sink = nullptr);

// Same loop with a caller-chosen oracle (used by the weighted variant).
CapacitatedOutcome quadratically_capacitated_flow_with_oracle(
    const Graph& g, const EnergyMatrices& p, double eps, const CoupledOracle& oracle,
    const SolverOptions& opts = {}, TraceSink* sink = nullptr);

// Normalizes blocks so min_e lambda_min = 1 (the coupled oracle's required
// form); returns the scale that was divided out.
std::pair<EnergyMatrices, double> normalize_blocks(const EnergyMatrices& p);

}  // namespace mcf
