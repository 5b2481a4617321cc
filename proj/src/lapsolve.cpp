#include "mcf/lapsolve.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "mcf/errors.hpp"

namespace mcf {

ScalarLaplacian::ScalarLaplacian(const Graph& g, std::span<const double> edge_weights) {
  if (static_cast<int>(edge_weights.size()) != g.m())
    throw DimensionError("ScalarLaplacian: weight count mismatch");
  n = g.n;
  const int m = g.m();
  tails.resize(m);
  heads.resize(m);
  weights.assign(edge_weights.begin(), edge_weights.end());
  diag.assign(n, 0.0);
  for (int e = 0; e < m; ++e) {
    tails[e] = g.edges[e].tail;
    heads[e] = g.edges[e].head;
    if (!(weights[e] > 0.0)) throw NumericError("ScalarLaplacian: nonpositive edge weight");
    diag[tails[e]] += weights[e];
    diag[heads[e]] += weights[e];
  }

  // BFS spanning tree rooted at vertex 0, ties broken by edge input order.
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, edge)
  for (int e = 0; e < m; ++e) {
    adj[tails[e]].push_back({heads[e], e});
    adj[heads[e]].push_back({tails[e], e});
  }
  parent.assign(n, -1);
  parent_edge.assign(n, -1);
  bfs_order.clear();
  bfs_order.reserve(n);
  std::vector<char> seen(n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    bfs_order.push_back(u);
    for (auto [w, e] : adj[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        parent[w] = u;
        parent_edge[w] = e;
        q.push(w);
      }
    }
  }
  if (static_cast<int>(bfs_order.size()) != n)
    throw NumericError("ScalarLaplacian: graph is disconnected");
}

std::vector<double> ScalarLaplacian::apply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n) throw DimensionError("ScalarLaplacian::apply: length mismatch");
  std::vector<double> y(n, 0.0);
  for (size_t e = 0; e < weights.size(); ++e) {
    const double d = weights[e] * (x[heads[e]] - x[tails[e]]);
    y[heads[e]] += d;
    y[tails[e]] -= d;
  }
  return y;
}

std::vector<double> ScalarLaplacian::tree_solve(std::span<const double> b) const {
  // Electrical view: inject b, push subtree imbalances through parent edges,
  // then integrate potentials root-down.
  std::vector<double> subtree(b.begin(), b.end());
  for (int idx = n - 1; idx >= 1; --idx) {
    const int u = bfs_order[idx];
    subtree[parent[u]] += subtree[u];
  }
  std::vector<double> x(n, 0.0);
  for (int idx = 1; idx < n; ++idx) {
    const int u = bfs_order[idx];
    const int e = parent_edge[u];
    // Flow into the subtree of u equals its total injection.
    const double flow = (heads[e] == u) ? subtree[u] : -subtree[u];
    const double drop = flow / weights[e];
    x[u] = (heads[e] == u) ? x[parent[u]] + drop : x[parent[u]] - drop;
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  for (double& v : x) v -= mean;
  return x;
}

namespace {

void mean_center(std::span<double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double& v : x) v -= mean;
}

}  // namespace

std::vector<double> laplacian_solve(const ScalarLaplacian& lap, std::span<const double> b,
                                    double tol, LapPreconKind precon, SolveReport* report) {
  if (static_cast<int>(b.size()) != lap.n) throw DimensionError("laplacian_solve: length mismatch");
  const double bmax = norm_inf(b);
  double bsum = 0.0;
  for (double v : b) bsum += v;
  if (std::abs(bsum) > 1e-9 * std::max(bmax, 1e-300))
    throw NumericError("laplacian_solve: rhs is not orthogonal to constants");

  SolveReport rep;
  rep.theta = tol;
  const double bnorm = norm2(b);
  std::vector<double> x(lap.n, 0.0);
  if (bnorm == 0.0) {
    if (report) *report = rep;
    return x;
  }

  auto precondition = [&](const std::vector<double>& r) {
    std::vector<double> z;
    if (precon == LapPreconKind::tree) {
      z = lap.tree_solve(r);
    } else {
      z.resize(lap.n);
      for (int u = 0; u < lap.n; ++u) z[u] = r[u] / lap.diag[u];
    }
    mean_center(z);
    return z;
  };

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z = precondition(r);
  std::vector<double> p = z;
  double rz = dot(r, z);
  const long cap = 100 + 40L * lap.n;
  long iter = 0;
  double rnorm = bnorm;
  while (rnorm > tol * bnorm) {
    if (iter >= cap) throw NumericError("laplacian_solve: no convergence after iteration cap");
    std::vector<double> q = lap.apply(p);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) throw NumericError("laplacian_solve: breakdown (operator not PD on subspace)");
    const double alpha = rz / pq;
    for (int u = 0; u < lap.n; ++u) {
      x[u] += alpha * p[u];
      r[u] -= alpha * q[u];
    }
    z = precondition(r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int u = 0; u < lap.n; ++u) p[u] = z[u] + beta * p[u];
    rnorm = norm2(r);
    ++iter;
  }
  mean_center(x);
  rep.iterations = iter;
  rep.relative_residual = rnorm / bnorm;
  if (report) *report = rep;
  return x;
}

CoupledOperator::CoupledOperator(const Graph& g, const EnergyMatrices& p_) : graph(g), p(p_) {
  const int k = p.k;
  if (p.m != g.m()) throw DimensionError("CoupledOperator: block count mismatch");
  inv_blocks.assign(static_cast<size_t>(p.m) * k * k, 0.0);
  for (int e = 0; e < p.m; ++e) {
    SymEig eig = sym_eig(p.block(e), k);
    double* inv = inv_blocks.data() + static_cast<size_t>(e) * k * k;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int l = 0; l < k; ++l) s += eig.vec(i, l) * eig.vec(j, l) / eig.values[l];
        inv[static_cast<size_t>(i) * k + j] = s;
        inv[static_cast<size_t>(j) * k + i] = s;
      }
  }
}

std::vector<double> CoupledOperator::apply(std::span<const double> x) const {
  const int k = p.k;
  if (static_cast<int>(x.size()) != graph.n * k)
    throw DimensionError("CoupledOperator::apply: length mismatch");
  std::vector<double> y(static_cast<size_t>(graph.n) * k, 0.0);
  std::vector<double> t(k), s(k);
  for (int e = 0; e < graph.m(); ++e) {
    const int a = graph.edges[e].tail, bv = graph.edges[e].head;
    for (int i = 0; i < k; ++i) t[i] = x[static_cast<size_t>(bv) * k + i] - x[static_cast<size_t>(a) * k + i];
    const double* inv = inv_blocks.data() + static_cast<size_t>(e) * k * k;
    for (int i = 0; i < k; ++i) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += inv[static_cast<size_t>(i) * k + j] * t[j];
      s[i] = acc;
    }
    for (int i = 0; i < k; ++i) {
      y[static_cast<size_t>(bv) * k + i] += s[i];
      y[static_cast<size_t>(a) * k + i] -= s[i];
    }
  }
  return y;
}

BlockPreconditioner build_preconditioner(const Graph& g, const EnergyMatrices& p) {
  std::vector<double> w(g.m());
  for (int e = 0; e < g.m(); ++e) {
    if (!(p.lambda_min[e] > 0.0)) throw NumericError("build_preconditioner: block not PD");
    w[e] = 1.0 / p.lambda_min[e];
  }
  BlockPreconditioner pre;
  pre.k = p.k;
  pre.lap = ScalarLaplacian(g, w);
  return pre;
}

std::vector<double> BlockPreconditioner::apply_inverse(std::span<const double> b, double lap_tol,
                                                       LapPreconKind precon, long* solve_count) const {
  const int n = lap.n;
  if (static_cast<int>(b.size()) != n * k)
    throw DimensionError("BlockPreconditioner::apply_inverse: length mismatch");
  std::vector<double> out(static_cast<size_t>(n) * k, 0.0);
  std::vector<double> bi(n);
  for (int i = 0; i < k; ++i) {
    double mean = 0.0;
    for (int u = 0; u < n; ++u) mean += b[static_cast<size_t>(u) * k + i];
    mean /= n;
    for (int u = 0; u < n; ++u) bi[u] = b[static_cast<size_t>(u) * k + i] - mean;
    std::vector<double> xi = laplacian_solve(lap, bi, lap_tol, precon);
    for (int u = 0; u < n; ++u) out[static_cast<size_t>(u) * k + i] = xi[u];
    if (solve_count) ++*solve_count;
  }
  return out;
}

void project_out_commodity_constants(std::span<double> x, int k, int n) {
  for (int i = 0; i < k; ++i) {
    double mean = 0.0;
    for (int u = 0; u < n; ++u) mean += x[static_cast<size_t>(u) * k + i];
    mean /= n;
    for (int u = 0; u < n; ++u) x[static_cast<size_t>(u) * k + i] -= mean;
  }
}

namespace {

long cheby_iteration_cap(double kappa, double theta) {
  const double bound = std::sqrt(2.0 * kappa) * std::log(2.0 / theta);
  return std::max<long>(10, 50L * static_cast<long>(std::ceil(bound)));
}

}  // namespace

std::pair<std::vector<double>, SolveReport> precon_cheby(const CoupledOperator& op,
                                                         const BlockPreconditioner& pre,
                                                         std::span<const double> b, double kappa,
                                                         double theta, const SolverOptions& opts) {
  if (!(kappa >= 1.0)) throw NumericError("precon_cheby: kappa must be >= 1");
  if (!(theta > 0.0 && theta < 1.0)) throw NumericError("precon_cheby: theta out of range");
  const int k = op.k(), n = op.graph.n;
  SolveReport rep;
  rep.theta = theta;

  std::vector<double> rhs(b.begin(), b.end());
  project_out_commodity_constants(rhs, k, n);
  std::vector<double> x(static_cast<size_t>(n) * k, 0.0);
  if (norm2(rhs) == 0.0) return {x, rep};

  // With inversion L <= Ltilde <= kappa L, so the spectrum of Ltilde+ L sits
  // in [1/(2 kappa), 1] (the extra 2 absorbs inner-solve slack). This is the
  // [1, 2 kappa] interval of the analysis up to a scale on the
  // preconditioner, which Chebyshev does not see.
  const double lo = 1.0 / (2.0 * kappa), hi = 1.0;
  const double center = 0.5 * (hi + lo), half = 0.5 * (hi - lo);

  std::vector<double> r = rhs;
  std::vector<double> z = pre.apply_inverse(r, opts.lap_tol, opts.lap_precon, &rep.preconditioner_solves);
  const double bz0 = dot(rhs, z);
  if (!(bz0 > 0.0)) return {x, rep};
  // Stop when r^T Ltilde^+ r <= (theta^2 / kappa) * b^T Ltilde^+ b; through
  // the sandwich L <= Ltilde <= kappa L this implies the L-norm contract.
  const double stop = theta * theta / kappa * bz0;

  const double sigma1 = center / half;
  double rho_prev = 1.0 / sigma1;
  std::vector<double> d(z.size());
  for (size_t i = 0; i < z.size(); ++i) d[i] = z[i] / center;

  const long cap = cheby_iteration_cap(kappa, theta);
  double rz = bz0;
  rep.converged = false;
  while (rep.iterations < cap) {
    std::vector<double> ad = op.apply(d);
    for (size_t i = 0; i < x.size(); ++i) {
      x[i] += d[i];
      r[i] -= ad[i];
    }
    project_out_commodity_constants(r, k, n);
    z = pre.apply_inverse(r, opts.lap_tol, opts.lap_precon, &rep.preconditioner_solves);
    rz = dot(r, z);
    ++rep.iterations;
    if (rz <= stop) {
      rep.converged = true;
      break;
    }
    const double rho = 1.0 / (2.0 * sigma1 - rho_prev);
    const double a1 = rho * rho_prev, a2 = 2.0 * rho / half;
    for (size_t i = 0; i < d.size(); ++i) d[i] = a1 * d[i] + a2 * z[i];
    rho_prev = rho;
  }
  rep.relative_residual = std::sqrt(std::max(0.0, rz) / bz0);
  project_out_commodity_constants(x, k, n);
  return {x, rep};
}

std::pair<std::vector<double>, SolveReport> precon_cg(const CoupledOperator& op,
                                                      const BlockPreconditioner& pre,
                                                      std::span<const double> b, double kappa,
                                                      double theta, const SolverOptions& opts) {
  if (!(kappa >= 1.0)) throw NumericError("precon_cg: kappa must be >= 1");
  if (!(theta > 0.0 && theta < 1.0)) throw NumericError("precon_cg: theta out of range");
  const int k = op.k(), n = op.graph.n;
  SolveReport rep;
  rep.theta = theta;

  std::vector<double> rhs(b.begin(), b.end());
  project_out_commodity_constants(rhs, k, n);
  std::vector<double> x(static_cast<size_t>(n) * k, 0.0);
  if (norm2(rhs) == 0.0) return {x, rep};

  std::vector<double> r = rhs;
  std::vector<double> z = pre.apply_inverse(r, opts.lap_tol, opts.lap_precon, &rep.preconditioner_solves);
  const double bz0 = dot(rhs, z);
  if (!(bz0 > 0.0)) return {x, rep};
  const double stop = theta * theta / kappa * bz0;

  std::vector<double> p = z;
  double rz = bz0;
  const long cap = cheby_iteration_cap(kappa, theta);
  rep.converged = false;
  while (rep.iterations < cap) {
    std::vector<double> q = op.apply(p);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) throw NumericError("precon_cg: breakdown");
    const double alpha = rz / pq;
    for (size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    project_out_commodity_constants(r, k, n);
    z = pre.apply_inverse(r, opts.lap_tol, opts.lap_precon, &rep.preconditioner_solves);
    const double rz_new = dot(r, z);
    ++rep.iterations;
    if (rz_new <= stop) {
      rz = rz_new;
      rep.converged = true;
      break;
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  rep.relative_residual = std::sqrt(std::max(0.0, rz) / bz0);
  project_out_commodity_constants(x, k, n);
  return {x, rep};
}

std::pair<VertexPotentials, SolveReport> solve_coupled_system(const Graph& g,
                                                              const EnergyMatrices& p,
                                                              const DemandVector& d, double delta,
                                                              const SolverOptions& opts) {
  if (d.k != p.k || d.n != g.n) throw DimensionError("solve_coupled_system: dimension mismatch");
  CoupledOperator op(g, p);
  BlockPreconditioner pre = build_preconditioner(g, p);
  const double kappa = block_condition_bound(p);
  auto [x, rep] = opts.coupled_solver == CoupledSolverKind::cg
                      ? precon_cg(op, pre, d.v, kappa, delta, opts)
                      : precon_cheby(op, pre, d.v, kappa, delta, opts);
  VertexPotentials phi(p.k, g.n);
  phi.v = std::move(x);
  return {phi, rep};
}

VertexPotentials solve_coupled_dense(const Graph& g, const EnergyMatrices& p,
                                     const DemandVector& d) {
  const int k = p.k, n = g.n, dim = n * k;
  if (n > 50) throw BudgetError("solve_coupled_dense: n exceeds the dense fallback budget");
  CoupledOperator op(g, p);
  // Assemble L by stamping the per-edge inverse blocks.
  std::vector<double> dense(static_cast<size_t>(dim) * dim, 0.0);
  for (int e = 0; e < g.m(); ++e) {
    const int a = g.edges[e].tail, bv = g.edges[e].head;
    const double* inv = op.inv_blocks.data() + static_cast<size_t>(e) * k * k;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const double w = inv[static_cast<size_t>(i) * k + j];
        dense[static_cast<size_t>(a * k + i) * dim + (a * k + j)] += w;
        dense[static_cast<size_t>(bv * k + i) * dim + (bv * k + j)] += w;
        dense[static_cast<size_t>(a * k + i) * dim + (bv * k + j)] -= w;
        dense[static_cast<size_t>(bv * k + i) * dim + (a * k + j)] -= w;
      }
  }
  SymEig eig = sym_eig(dense, dim);
  const double cutoff = 1e-12 * std::max(eig.values.back(), 0.0);
  VertexPotentials phi(k, n);
  // phi = sum over eigenpairs above cutoff of v (v^T d) / lambda.
  for (int l = 0; l < dim; ++l) {
    if (eig.values[l] <= cutoff) continue;
    double proj = 0.0;
    for (int r = 0; r < dim; ++r) proj += eig.vec(r, l) * d.v[r];
    const double c = proj / eig.values[l];
    for (int r = 0; r < dim; ++r) phi.v[r] += c * eig.vec(r, l);
  }
  return phi;
}

}  // namespace mcf
