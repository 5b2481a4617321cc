#pragma once

namespace mcf {

enum class CoupledSolverKind { cheby, cg };
enum class LapPreconKind { jacobi, tree };
enum class OuterKind { mmw, signs };

// Knobs shared by the solver stack. Iteration overrides <= 0 mean "use the
// mode's default": the literal paper formulas when paper_faithful is set,
// desk-scale defaults otherwise.
struct SolverOptions {
  OuterKind outer = OuterKind::mmw;
  CoupledSolverKind coupled_solver = CoupledSolverKind::cheby;
  LapPreconKind lap_precon = LapPreconKind::jacobi;
  bool paper_faithful = false;

  double lap_tol = 1e-10;     // inner Laplacian relative residual
  double solve_floor = 1e-12; // floor for the coupled-solve tolerance formula
  int threads = 1;            // 0 = hardware concurrency

  double rho_inner = 0.0;     // capacitated MWU width
  long n_inner = 0;           // capacitated MWU iterations
  double rho_outer = 0.0;     // outer MMW / sign width
  long n_outer = 0;           // outer iterations
  long convolve_budget = 1L << 22;  // max count-table size in ConvolveAll
};

}  // namespace mcf
