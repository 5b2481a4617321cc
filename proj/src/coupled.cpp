#include "mcf/coupled.hpp"

#include <cmath>
#include <queue>

#include "mcf/errors.hpp"

namespace mcf {

std::vector<double> make_kirchhoff(const Graph& g, std::span<const double> demand,
                                   std::span<const double> flow) {
  if (static_cast<int>(demand.size()) != g.n || static_cast<int>(flow.size()) != g.m())
    throw DimensionError("make_kirchhoff: dimension mismatch");
  // Surplus at each vertex that has to be pushed to the root.
  std::vector<double> excess = incidence_transpose_apply_scalar(g, flow);
  for (int u = 0; u < g.n; ++u) excess[u] -= demand[u];

  // BFS tree from vertex 0, root r = 0, ties by input edge order.
  std::vector<std::vector<std::pair<int, int>>> adj(g.n);
  for (int e = 0; e < g.m(); ++e) {
    adj[g.edges[e].tail].push_back({g.edges[e].head, e});
    adj[g.edges[e].head].push_back({g.edges[e].tail, e});
  }
  std::vector<int> parent(g.n, -1), parent_edge(g.n, -1), order;
  order.reserve(g.n);
  std::vector<char> seen(g.n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    order.push_back(u);
    for (auto [w, e] : adj[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        parent[w] = u;
        parent_edge[w] = e;
        q.push(w);
      }
    }
  }
  if (static_cast<int>(order.size()) != g.n)
    throw NumericError("make_kirchhoff: graph is disconnected");

  // Single leaf-to-root accumulation: the tree edge above u carries the
  // combined surplus of u's subtree out toward the root.
  std::vector<double> out(flow.begin(), flow.end());
  std::vector<double> acc = excess;
  for (int idx = g.n - 1; idx >= 1; --idx) {
    const int u = order[idx];
    const int e = parent_edge[u];
    // Sending acc[u] units u -> parent removes that much excess at u.
    if (g.edges[e].tail == u)
      out[e] += acc[u];
    else
      out[e] -= acc[u];
    acc[parent[u]] += acc[u];
  }
  return out;
}

CoupledResult quadratically_coupled_flow(const Graph& g, const EnergyMatrices& p,
                                         const DemandVector& d, double delta, double u_bound,
                                         double kappa, const SolverOptions& opts) {
  const int k = p.k, n = g.n, m = g.m();
  if (d.k != k || d.n != n) throw DimensionError("quadratically_coupled_flow: dimension mismatch");

  // Preconditions of the oracle's contract: blocks normalized to
  // I <= P(e) <= U*I with per-block condition at most kappa.
  constexpr double slack = 1e-9;
  for (int e = 0; e < m; ++e) {
    if (p.lambda_min[e] < 1.0 - slack)
      throw NumericError("quadratically_coupled_flow: P not normalized (lambda_min < 1)");
    if (p.lambda_max[e] > u_bound * (1.0 + slack))
      throw NumericError("quadratically_coupled_flow: P exceeds the stated upper bound U");
    if (p.lambda_max[e] > kappa * p.lambda_min[e] * (1.0 + slack))
      throw NumericError("quadratically_coupled_flow: block condition exceeds kappa");
  }
  if (!(delta > 0.0 && delta < 0.1)) {
    // Callers sometimes hand down delta = eps/m driven to nonsense; clamp.
    delta = std::min(std::max(delta, 1e-12), 0.099);
  }

  // Solve tolerance delta / (5 m^6 k^2 U^4); the exact value underflows at
  // any realistic size, so it is floored unless running paper-faithful.
  const double m6 = std::pow(static_cast<double>(m), 6.0);
  const double formula = delta / (5.0 * m6 * k * k * std::pow(u_bound, 4.0));
  double eps_solve = std::max(formula, opts.solve_floor);
  if (eps_solve < 1e-12) eps_solve = 1e-12;

  CoupledResult res;
  VertexPotentials phi_unscaled;
  if (opts.paper_faithful && formula < opts.solve_floor) {
    phi_unscaled = solve_coupled_dense(g, p, d);
    res.report.theta = formula;
    res.report.epsilon_solve = formula;
  } else {
    auto [phi, rep] = solve_coupled_system(g, p, d, eps_solve, opts);
    if (!rep.converged) throw NumericError("quadratically_coupled_flow: solver did not converge");
    phi_unscaled = std::move(phi);
    res.report = rep;
    res.report.epsilon_solve = formula;
  }

  // scale = sqrt(phi^T L phi); potentials reported scaled to unit energy.
  CoupledOperator op(g, p);
  std::vector<double> lphi = op.apply(phi_unscaled.v);
  const double scale2 = dot(phi_unscaled.v, lphi);
  const double scale = std::sqrt(std::max(scale2, 0.0));
  res.scale = scale;
  res.potentials = VertexPotentials(k, n);
  if (scale > 0.0)
    for (size_t i = 0; i < phi_unscaled.v.size(); ++i) res.potentials.v[i] = phi_unscaled.v[i] / scale;

  // Ohmic flow from the unscaled potentials: f = P^-1 Gamma phi.
  MultiFlow ohmic(k, m);
  std::vector<double> t(k);
  for (int e = 0; e < m; ++e) {
    const int a = g.edges[e].tail, b = g.edges[e].head;
    for (int i = 0; i < k; ++i) t[i] = phi_unscaled.at(b, i) - phi_unscaled.at(a, i);
    const double* inv = op.inv_blocks.data() + static_cast<size_t>(e) * k * k;
    for (int i = 0; i < k; ++i) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += inv[static_cast<size_t>(i) * k + j] * t[j];
      ohmic.at(e, i) = acc;
    }
  }

  // Per-commodity conservation repair.
  res.flow = MultiFlow(k, m);
  std::vector<double> di(n), fi(m);
  for (int i = 0; i < k; ++i) {
    for (int u = 0; u < n; ++u) di[u] = d.at(u, i);
    for (int e = 0; e < m; ++e) fi[e] = ohmic.at(e, i);
    std::vector<double> repaired = make_kirchhoff(g, di, fi);
    for (int e = 0; e < m; ++e) res.flow.at(e, i) = repaired[e];
  }
  res.energy = energy(p, res.flow);
  return res;
}

}  // namespace mcf
