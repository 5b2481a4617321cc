#include "mcf/refsolve.hpp"

#include <algorithm>
#include <cmath>

#include "mcf/errors.hpp"

namespace mcf::refsolve {

namespace {
constexpr double kTol = 1e-9;  // simplex pivot tolerance
}

std::vector<double> dense_pinv_apply(std::span<const double> sym, int dim,
                                     std::span<const double> rhs, double rel_cutoff) {
  if (static_cast<int>(rhs.size()) != dim) throw DimensionError("dense_pinv_apply: size mismatch");
  SymEig eig = sym_eig(sym, dim);
  const double cutoff = rel_cutoff * std::max(0.0, eig.values.back());
  std::vector<double> out(dim, 0.0);
  for (int l = 0; l < dim; ++l) {
    if (eig.values[l] <= cutoff) continue;
    double proj = 0.0;
    for (int r = 0; r < dim; ++r) proj += eig.vec(r, l) * rhs[r];
    const double c = proj / eig.values[l];
    for (int r = 0; r < dim; ++r) out[r] += c * eig.vec(r, l);
  }
  return out;
}

DenseCoupledResult dense_coupled_oracle(const Graph& g, const EnergyMatrices& p,
                                        const DemandVector& d) {
  const int k = p.k, n = g.n, m = g.m(), dim = n * k;
  if (dim > 200) throw BudgetError("dense_coupled_oracle: n*k exceeds 200");
  if (d.k != k || d.n != n) throw DimensionError("dense_coupled_oracle: dimension mismatch");

  // Per-edge inverse blocks, assembled here on purpose (no solver reuse).
  std::vector<double> inv(static_cast<size_t>(m) * k * k, 0.0);
  for (int e = 0; e < m; ++e) {
    SymEig eig = sym_eig(p.block(e), k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int l = 0; l < k; ++l) s += eig.vec(i, l) * eig.vec(j, l) / eig.values[l];
        inv[(static_cast<size_t>(e) * k + i) * k + j] = s;
        inv[(static_cast<size_t>(e) * k + j) * k + i] = s;
      }
  }

  std::vector<double> dense(static_cast<size_t>(dim) * dim, 0.0);
  for (int e = 0; e < m; ++e) {
    const int a = g.edges[e].tail, b = g.edges[e].head;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const double w = inv[(static_cast<size_t>(e) * k + i) * k + j];
        dense[static_cast<size_t>(a * k + i) * dim + (a * k + j)] += w;
        dense[static_cast<size_t>(b * k + i) * dim + (b * k + j)] += w;
        dense[static_cast<size_t>(a * k + i) * dim + (b * k + j)] -= w;
        dense[static_cast<size_t>(b * k + i) * dim + (a * k + j)] -= w;
      }
  }

  std::vector<double> phi = dense_pinv_apply(dense, dim, d.v);
  DenseCoupledResult res;
  res.energy = dot(phi, d.v);
  res.flow = MultiFlow(k, m);
  std::vector<double> t(k);
  for (int e = 0; e < m; ++e) {
    const int a = g.edges[e].tail, b = g.edges[e].head;
    for (int i = 0; i < k; ++i) t[i] = phi[static_cast<size_t>(b) * k + i] - phi[static_cast<size_t>(a) * k + i];
    for (int i = 0; i < k; ++i) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += inv[(static_cast<size_t>(e) * k + i) * k + j] * t[j];
      res.flow.at(e, i) = acc;
    }
  }
  return res;
}

LpSolution lp_solve_max(const LpProblem& prob) {
  const int nvars = prob.nvars;
  const int nrows = static_cast<int>(prob.rows.size());
  int nslack = 0;
  for (const auto& r : prob.rows)
    if (!r.equality) ++nslack;
  const int nart = nrows;
  const int ncols = nvars + nslack + nart;

  // Tableau: nrows constraint rows plus an objective row; rhs in the last
  // column. Objective row holds reduced costs; its rhs is minus the value.
  std::vector<std::vector<double>> t(nrows + 1, std::vector<double>(ncols + 1, 0.0));
  std::vector<int> basis(nrows);

  int slack_at = nvars;
  for (int i = 0; i < nrows; ++i) {
    const auto& row = prob.rows[i];
    if (static_cast<int>(row.coeffs.size()) != nvars)
      throw DimensionError("lp_solve_max: row width mismatch");
    for (int j = 0; j < nvars; ++j) t[i][j] = row.coeffs[j];
    t[i][ncols] = row.rhs;
    if (!row.equality) t[i][slack_at++] = 1.0;
    if (t[i][ncols] < 0.0)
      for (auto& v : t[i]) v = -v;
    t[i][nvars + nslack + i] = 1.0;  // artificial
    basis[i] = nvars + nslack + i;
  }

  auto pivot = [&](int pr, int pc) {
    const double piv = t[pr][pc];
    for (int j = 0; j <= ncols; ++j) t[pr][j] /= piv;
    for (int i = 0; i <= nrows; ++i) {
      if (i == pr) continue;
      const double factor = t[i][pc];
      if (factor == 0.0) continue;
      for (int j = 0; j <= ncols; ++j) t[i][j] -= factor * t[pr][j];
    }
    basis[pr] = pc;
  };

  // Bland's rule: lowest-index entering column with positive reduced cost,
  // lowest basic index on ratio ties. Terminates without cycling.
  auto run_simplex = [&](int allowed_cols) {
    for (;;) {
      int pc = -1;
      for (int j = 0; j < allowed_cols; ++j) {
        if (t[nrows][j] > kTol) {
          pc = j;
          break;
        }
      }
      if (pc < 0) return;
      int pr = -1;
      double best = 0.0;
      for (int i = 0; i < nrows; ++i) {
        if (t[i][pc] > kTol) {
          const double ratio = t[i][ncols] / t[i][pc];
          if (pr < 0 || ratio < best - kTol ||
              (ratio < best + kTol && basis[i] < basis[pr])) {
            pr = i;
            best = ratio;
          }
        }
      }
      if (pr < 0) throw NumericError("lp_solve_max: unbounded");
      pivot(pr, pc);
    }
  };

  // Phase 1: maximize -sum(artificials); price out the artificial basis.
  for (int j = 0; j <= ncols; ++j) {
    double s = 0.0;
    for (int i = 0; i < nrows; ++i) s += t[i][j];
    t[nrows][j] = s;
  }
  for (int i = 0; i < nrows; ++i) t[nrows][nvars + nslack + i] = 0.0;
  run_simplex(nvars + nslack);
  if (t[nrows][ncols] > kTol * std::max(1.0, std::abs(t[nrows][ncols])) && t[nrows][ncols] > 1e-7)
    throw NumericError("lp_solve_max: infeasible");

  // Drive leftover artificials out of the basis or mark their rows inert.
  for (int i = 0; i < nrows; ++i) {
    if (basis[i] < nvars + nslack) continue;
    int pc = -1;
    for (int j = 0; j < nvars + nslack; ++j) {
      if (std::abs(t[i][j]) > kTol) {
        pc = j;
        break;
      }
    }
    if (pc >= 0) pivot(i, pc);
    // else: redundant row, stays with its zero-valued artificial
  }

  // Phase 2: the real objective, priced out over the current basis.
  for (int j = 0; j <= ncols; ++j) t[nrows][j] = 0.0;
  for (int j = 0; j < nvars; ++j) t[nrows][j] = prob.objective[j];
  for (int i = 0; i < nrows; ++i) {
    const double c = basis[i] < nvars ? prob.objective[basis[i]] : 0.0;
    if (c == 0.0) continue;
    for (int j = 0; j <= ncols; ++j) t[nrows][j] -= c * t[i][j];
  }
  run_simplex(nvars + nslack);

  LpSolution sol;
  sol.value = -t[nrows][ncols];
  sol.x.assign(nvars, 0.0);
  for (int i = 0; i < nrows; ++i)
    if (basis[i] < nvars) sol.x[basis[i]] = t[i][ncols];
  return sol;
}

namespace {

// Shared constraint builder: conservation rows for flows split into
// f+ - f-, one capacity row per edge. The "scale" column block multiplies
// the demands (lambda for concurrent, F_i per commodity for weighted).
void add_conservation_and_capacity(const Instance& inst, bool per_commodity_value,
                                   LpProblem* prob) {
  const int k = inst.k(), m = inst.m(), n = inst.n();
  const int fplus = 0, fminus = k * m;
  const int scale0 = 2 * k * m;
  const DemandVector d = inst.demand_vector();

  for (int i = 0; i < k; ++i) {
    for (int u = 0; u < n; ++u) {
      LpRow row;
      row.equality = true;
      row.rhs = 0.0;
      row.coeffs.assign(prob->nvars, 0.0);
      for (int e = 0; e < m; ++e) {
        double gamma = 0.0;
        if (inst.graph.edges[e].head == u) gamma = 1.0;
        if (inst.graph.edges[e].tail == u) gamma = -1.0;
        if (gamma == 0.0) continue;
        row.coeffs[fplus + i * m + e] = gamma;
        row.coeffs[fminus + i * m + e] = -gamma;
      }
      row.coeffs[scale0 + (per_commodity_value ? i : 0)] = -d.at(u, i);
      prob->rows.push_back(std::move(row));
    }
  }
  for (int e = 0; e < m; ++e) {
    LpRow row;
    row.equality = false;
    row.rhs = inst.graph.edges[e].capacity;
    row.coeffs.assign(prob->nvars, 0.0);
    for (int i = 0; i < k; ++i) {
      row.coeffs[fplus + i * m + e] = 1.0;
      row.coeffs[fminus + i * m + e] = 1.0;
    }
    prob->rows.push_back(std::move(row));
  }
}

}  // namespace

double lp_concurrent_oracle(const Instance& inst) {
  const int k = inst.k(), m = inst.m();
  if (m * k > 200) throw BudgetError("lp_concurrent_oracle: m*k exceeds 200");
  LpProblem prob;
  prob.nvars = 2 * k * m + 1;
  prob.objective.assign(prob.nvars, 0.0);
  prob.objective[2 * k * m] = 1.0;
  add_conservation_and_capacity(inst, /*per_commodity_value=*/false, &prob);
  return lp_solve_max(prob).value;
}

double lp_weighted_oracle(const Instance& inst, std::span<const double> weights) {
  const int k = inst.k(), m = inst.m();
  if (m * k > 200) throw BudgetError("lp_weighted_oracle: m*k exceeds 200");
  if (static_cast<int>(weights.size()) != k)
    throw DimensionError("lp_weighted_oracle: weight count mismatch");
  LpProblem prob;
  prob.nvars = 2 * k * m + k;
  prob.objective.assign(prob.nvars, 0.0);
  for (int i = 0; i < k; ++i) prob.objective[2 * k * m + i] = weights[i];
  add_conservation_and_capacity(inst, /*per_commodity_value=*/true, &prob);
  return lp_solve_max(prob).value;
}

CountTable subset_sum_brute(std::span<const std::int64_t> a) {
  if (a.size() > 20) throw BudgetError("subset_sum_brute: k exceeds 20");
  std::int64_t total = 0;
  for (auto v : a) {
    if (v < 1) throw NumericError("subset_sum_brute: values must be positive");
    total += v;
  }
  CountTable table;
  table.counts.assign(static_cast<size_t>(total) + 1, 0);
  const std::uint32_t lim = 1u << a.size();
  for (std::uint32_t mask = 0; mask < lim; ++mask) {
    std::int64_t s = 0;
    for (size_t i = 0; i < a.size(); ++i)
      if (mask & (1u << i)) s += a[i];
    ++table.counts[static_cast<size_t>(s)];
  }
  return table;
}

std::vector<double> exact_sign_energy(std::span<const double> f_block, double u, double rho,
                                      double eps) {
  const int k = static_cast<int>(f_block.size());
  if (k > 12) throw BudgetError("exact_sign_energy: k exceeds 12");
  // Stabilize by subtracting the max exponent; it cancels against the
  // normalization.
  std::vector<double> exps;
  exps.reserve(1u << k);
  double xmax = -1e300;
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    double sf = 0.0;
    for (int i = 0; i < k; ++i) sf += (mask & (1u << i)) ? -f_block[i] : f_block[i];
    const double x = eps / rho * sf / u;
    exps.push_back(x);
    xmax = std::max(xmax, x);
  }
  std::vector<double> num(static_cast<size_t>(k) * k, 0.0);
  double wsum = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    const double w = std::exp(exps[mask] - xmax);
    wsum += w;
    for (int i = 0; i < k; ++i) {
      const double si = (mask & (1u << i)) ? -1.0 : 1.0;
      for (int j = 0; j < k; ++j) {
        const double sj = (mask & (1u << j)) ? -1.0 : 1.0;
        num[static_cast<size_t>(i) * k + j] += w * si * sj;
      }
    }
  }
  std::vector<double> p(static_cast<size_t>(k) * k, 0.0);
  const double inv_u2 = 1.0 / (u * u);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double v = num[static_cast<size_t>(i) * k + j] / wsum * inv_u2;
      if (i == j) v += eps * inv_u2;
      p[static_cast<size_t>(i) * k + j] = v;
    }
  return p;
}

}  // namespace mcf::refsolve
