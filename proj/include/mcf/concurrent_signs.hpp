#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcf/concurrent_mmw.hpp"
#include "mcf/config.hpp"
#include "mcf/graph.hpp"
#include "mcf/kvec.hpp"
#include "mcf/report.hpp"
#include "mcf/types.hpp"

namespace mcf {

// counts[j] = number of subsets of the input list summing to j, exact in
// 64-bit integers. Sum of all counts is 2^(list length).
struct CountTable {
  std::vector<std::uint64_t> counts;

  std::uint64_t at(std::size_t j) const { return j < counts.size() ? counts[j] : 0; }
};

// Sign vector maximizing s^T f(e): s_i = sign(f_i), zeros mapped to +1.
std::vector<int> opt_sign(std::span<const double> f_block);

// Rounds each entry toward zero to the grid (eps/(3k)) * u.
std::vector<double> round_flow(std::span<const double> f_block, double u, double eps, int k);

// Divide-and-conquer subset-sum counting via FFT convolution; values must be
// >= 1 and their total must fit the configured budget.
CountTable convolve_all(std::span<const std::int64_t> a, long budget = 1L << 22);

struct SignEnergyInput {
  std::vector<double> f_block;  // length k
  double u = 1.0;
  double rho = 1.0;       // outer width in the weight exponent
  double rho_prime = 0.0; // bound ||f||_1 <= rho_prime * u
  double eps = 0.1;
  long convolve_budget = 1L << 22;
};

// The grouped-weight energy matrix of the sign reformulation:
//   P = (1/sum_s w(s)) sum_s (w(s)/u^2) s s^T + (eps/u^2) I
// assembled from subset-sum count tables, never enumerating 2^k signs.
std::vector<double> energy_matrix_signs(const SignEnergyInput& in);

// The weight the grouped computation implicitly assigns to sign vector s;
// exposed so tests can check the multiplicative sandwich against the exact
// exp((eps/rho) s^T f / u).
double sign_weight_implied(std::span<const double> f_block, double u, double eps, double rho,
                           std::span<const int> s);

// Alternative outer layer: energy matrices rebuilt each iteration from the
// running flow sum via energy_matrix_signs.
ConcurrentOutcome max_concurrent_flow_signs(const Instance& inst, double eps,
                                            const SolverOptions& opts = {},
                                            TraceSink* sink = nullptr);

struct SignsDefaults {
  double rho = 0.0;
  double iterations = 0.0;
};
// rho = k, N = rho * k / eps^2.
SignsDefaults signs_paper_defaults(int k, double eps);

}  // namespace mcf
