#pragma once

#include <vector>

namespace mcf {

struct CapacitatedTraceRow {
  long t = 0;
  double mu = 0.0;
  double max_saturation = 0.0;
  bool accepted = false;
};

struct OuterTraceRow {
  long t = 0;
  double max_rel_congestion = 0.0;  // max_e ||f(e)||_1 / u(e) of the iterate
  bool width_ok = true;
};

// Collects per-iteration trace records and aggregate solver counters.
// Solvers take a nullable pointer; recording happens on the serial outer
// loops only.
struct TraceSink {
  std::vector<CapacitatedTraceRow> capacitated;
  std::vector<OuterTraceRow> outer;
  long coupled_calls = 0;
  long outer_solver_iterations = 0;  // Chebyshev/CG iterations, summed
  long laplacian_solves = 0;
  double max_block_condition = 0.0;  // largest per-block condition seen

  void clear() { *this = TraceSink{}; }
};

}  // namespace mcf
