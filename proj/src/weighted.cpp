#include "mcf/weighted.hpp"

#include <cmath>

#include "mcf/coupled.hpp"
#include "mcf/errors.hpp"
#include "mcf/parallel.hpp"

namespace mcf {

DemandMatrix demand_columns(const Instance& inst, std::span<const double> factors) {
  const int k = inst.k(), n = inst.n();
  if (static_cast<int>(factors.size()) != k)
    throw DimensionError("demand_columns: factor count mismatch");
  DemandMatrix cols;
  cols.reserve(k);
  for (int i = 0; i < k; ++i) {
    DemandVector col(k, n);
    const Commodity& c = inst.commodities.pairs[i];
    col.at(c.sink, i) += factors[i] * c.value;
    col.at(c.source, i) -= factors[i] * c.value;
    cols.push_back(std::move(col));
  }
  return cols;
}

WeightedCoupledResult weighted_coupled_flow(const Graph& g, const EnergyMatrices& p,
                                            const DemandMatrix& d, double delta,
                                            const SolverOptions& opts) {
  const int k = p.k, n = g.n, m = g.m();
  const int cols = static_cast<int>(d.size());
  if (cols < 1) throw DimensionError("weighted_coupled_flow: empty demand matrix");
  for (const auto& col : d)
    if (col.k != k || col.n != n) throw DimensionError("weighted_coupled_flow: column shape mismatch");
  double theta = std::min(std::max(delta, 1e-12), 0.099);

  // M = D^T L+ D, one coupled solve per column.
  WeightedCoupledResult res;
  std::vector<VertexPotentials> y(cols);
  std::vector<SolveReport> reps(cols);
  parallel_for(cols, opts.threads, [&](long j) {
    auto [phi, rep] = solve_coupled_system(g, p, d[j], theta, opts);
    if (!rep.converged) throw NumericError("weighted_coupled_flow: column solve did not converge");
    y[j] = std::move(phi);
    reps[j] = rep;
  });
  for (const auto& r : reps) res.report.merge(r);

  std::vector<double> mmat(static_cast<size_t>(cols) * cols);
  for (int i = 0; i < cols; ++i)
    for (int j = 0; j < cols; ++j) mmat[static_cast<size_t>(i) * cols + j] = dot(d[i].v, y[j].v);
  for (int i = 0; i < cols; ++i)
    for (int j = i + 1; j < cols; ++j) {
      const double s = 0.5 * (mmat[static_cast<size_t>(i) * cols + j] + mmat[static_cast<size_t>(j) * cols + i]);
      mmat[static_cast<size_t>(i) * cols + j] = s;
      mmat[static_cast<size_t>(j) * cols + i] = s;
    }

  // F = lambda M+ 1 with lambda = 1/(1^T M+ 1); k x k eigendecomposition
  // with a relative cutoff because dependent demands make M near-singular.
  SymEig eig = sym_eig(mmat, cols);
  const double cutoff = 1e-12 * std::max(0.0, eig.values.back());
  std::vector<double> minv_one(cols, 0.0);
  for (int l = 0; l < cols; ++l) {
    if (eig.values[l] <= cutoff) continue;
    double proj = 0.0;
    for (int r = 0; r < cols; ++r) proj += eig.vec(r, l);
    const double c = proj / eig.values[l];
    for (int r = 0; r < cols; ++r) minv_one[r] += c * eig.vec(r, l);
  }
  double one_minv_one = 0.0;
  for (double v : minv_one) one_minv_one += v;
  if (!(one_minv_one > 1e-300))
    throw NumericError("weighted_coupled_flow: demand matrix singular beyond tolerance");
  res.lambda = 1.0 / one_minv_one;
  res.flow_values.resize(cols);
  for (int i = 0; i < cols; ++i) res.flow_values[i] = res.lambda * minv_one[i];

  // phi = L+ D F reuses the column solves.
  res.potentials = VertexPotentials(k, n);
  for (int j = 0; j < cols; ++j)
    for (size_t r = 0; r < res.potentials.v.size(); ++r)
      res.potentials.v[r] += res.flow_values[j] * y[j].v[r];

  // Ohmic flow f = P^-1 Gamma phi, then per-commodity repair against D F.
  CoupledOperator op(g, p);
  MultiFlow ohmic(k, m);
  std::vector<double> t(k);
  for (int e = 0; e < m; ++e) {
    const int a = g.edges[e].tail, b = g.edges[e].head;
    for (int i = 0; i < k; ++i) t[i] = res.potentials.at(b, i) - res.potentials.at(a, i);
    const double* inv = op.inv_blocks.data() + static_cast<size_t>(e) * k * k;
    for (int i = 0; i < k; ++i) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) acc += inv[static_cast<size_t>(i) * k + j] * t[j];
      ohmic.at(e, i) = acc;
    }
  }
  DemandVector combined(k, n);
  for (int j = 0; j < cols; ++j)
    for (size_t r = 0; r < combined.v.size(); ++r) combined.v[r] += res.flow_values[j] * d[j].v[r];
  res.flow = MultiFlow(k, m);
  std::vector<double> di(n), fi(m);
  for (int i = 0; i < k; ++i) {
    for (int u = 0; u < n; ++u) di[u] = combined.at(u, i);
    for (int e = 0; e < m; ++e) fi[e] = ohmic.at(e, i);
    std::vector<double> repaired = make_kirchhoff(g, di, fi);
    for (int e = 0; e < m; ++e) res.flow.at(e, i) = repaired[e];
  }
  res.energy = energy(p, res.flow);
  return res;
}

namespace {

struct WeightedInnerResult {
  CapacitatedOutcome outcome;
  std::vector<double> avg_flow_values;
};

// Alg.-1-shaped loop with the weighted oracle; flow values of accepted
// iterations are averaged alongside the flows.
WeightedInnerResult weighted_capacitated(const Graph& g, const EnergyMatrices& p,
                                         const DemandMatrix& d, double eps,
                                         const SolverOptions& opts, TraceSink* sink) {
  std::vector<std::vector<double>> values;
  SolveReport merged;
  CoupledOracle oracle = [&](const EnergyMatrices& reweighed, double delta) {
    WeightedCoupledResult r = weighted_coupled_flow(g, reweighed, d, delta, opts);
    merged.merge(r.report);
    if (sink) sink->outer_solver_iterations += r.report.iterations;
    values.push_back(std::move(r.flow_values));
    return std::move(r.flow);
  };
  WeightedInnerResult res;
  res.outcome = quadratically_capacitated_flow_with_oracle(g, p, eps, oracle, opts, sink);
  res.outcome.report = merged;
  if (res.outcome.status == SolveStatus::flow) {
    const int cols = static_cast<int>(d.size());
    res.avg_flow_values.assign(cols, 0.0);
    long accepted = 0;
    for (size_t t = 0; t < values.size(); ++t) {
      if (!res.outcome.accepted[t]) continue;
      ++accepted;
      for (int i = 0; i < cols; ++i) res.avg_flow_values[i] += values[t][i];
    }
    for (int i = 0; i < cols; ++i) res.avg_flow_values[i] /= static_cast<double>(accepted);
  }
  return res;
}

struct WeightedOuterResult {
  bool ok = false;
  MultiFlow flow;
  std::vector<double> flow_values;
  double max_rel_congestion = 0.0;
};

// Matrix-MWU outer layer driving the weighted capacitated loop.
WeightedOuterResult weighted_outer(const Instance& inst, const DemandMatrix& d, double eps,
                                   const SolverOptions& opts, TraceSink* sink) {
  const int k = inst.k(), m = inst.m();
  const MmwDefaults paper = mmw_paper_defaults(k, eps);
  const double rho = opts.rho_outer > 0 ? opts.rho_outer : paper.rho;
  const double eps1 = eps / (k * rho);
  const double eps1_prime = -std::log(1.0 - eps1);
  long iterations;
  if (opts.n_outer > 0)
    iterations = opts.n_outer;
  else if (opts.paper_faithful)
    iterations = std::max<long>(1, static_cast<long>(std::ceil(paper.iterations)));
  else
    iterations = std::max<long>(12, static_cast<long>(std::ceil(2.0 / eps)));

  std::vector<MmwEdgeState> states(m, MmwEdgeState(k));
  MultiFlow fsum(k, m);
  std::vector<double> vsum(d.size(), 0.0);
  WeightedOuterResult out;

  for (long t = 1; t <= iterations; ++t) {
    std::vector<double> blocks(static_cast<size_t>(m) * k * k);
    for (int e = 0; e < m; ++e) {
      std::vector<double> pe = build_energy_from_w(states[e].w, k, inst.graph.edges[e].capacity, eps);
      std::copy(pe.begin(), pe.end(), blocks.begin() + static_cast<size_t>(e) * k * k);
    }
    EnergyMatrices p(k, m, std::move(blocks));
    if (sink)
      sink->max_block_condition = std::max(sink->max_block_condition, block_condition_bound(p));

    WeightedInnerResult inner = weighted_capacitated(inst.graph, p, d, eps, opts, sink);
    if (inner.outcome.status == SolveStatus::fail) return out;

    double max_rel = 0.0;
    for (int e = 0; e < m; ++e) {
      const double u = inst.graph.edges[e].capacity;
      max_rel = std::max(max_rel, norm1(inner.outcome.flow.block(e)) / u);
      mmw_update(states[e], inner.outcome.flow.block(e), u, eps, rho, eps1_prime);
    }
    if (sink) sink->outer.push_back({t, max_rel, true});
    for (size_t i = 0; i < fsum.v.size(); ++i) fsum.v[i] += inner.outcome.flow.v[i];
    for (size_t i = 0; i < vsum.size(); ++i) vsum[i] += inner.avg_flow_values[i];
  }

  out.ok = true;
  out.flow = MultiFlow(k, m);
  for (size_t i = 0; i < fsum.v.size(); ++i) out.flow.v[i] = fsum.v[i] / static_cast<double>(iterations);
  out.flow_values.resize(vsum.size());
  for (size_t i = 0; i < vsum.size(); ++i) out.flow_values[i] = vsum[i] / static_cast<double>(iterations);
  for (int e = 0; e < m; ++e)
    out.max_rel_congestion =
        std::max(out.max_rel_congestion, norm1(out.flow.block(e)) / inst.graph.edges[e].capacity);
  return out;
}

}  // namespace

WeightedOutcome max_weighted_flow(const WeightedSpec& spec, double eps, const SolverOptions& opts,
                                  TraceSink* sink) {
  const Instance& inst = spec.instance;
  const int k = inst.k();
  if (static_cast<int>(spec.weights.size()) != k)
    throw DimensionError("max_weighted_flow: weight count mismatch");
  double wmax = 0.0;
  for (double w : spec.weights) {
    if (w < 0.0) throw NumericError("max_weighted_flow: negative weight");
    wmax = std::max(wmax, w);
  }
  if (!(wmax > 0.0)) throw NumericError("max_weighted_flow: all weights zero");

  // Zero-weight commodities cannot improve the objective; route nothing.
  std::vector<int> active;
  for (int i = 0; i < k; ++i)
    if (spec.weights[i] > 0.0) active.push_back(i);
  Instance sub = inst;
  sub.commodities.pairs.clear();
  std::vector<double> wsub;
  for (int i : active) {
    sub.commodities.pairs.push_back(inst.commodities.pairs[i]);
    wsub.push_back(spec.weights[i]);
  }
  const int ka = sub.k();

  // Crude objective bracket: routing a single commodity along its bottleneck
  // path from below, per-commodity cut bounds summed from above.
  double total_cap = 0.0;
  for (const auto& e : inst.graph.edges) total_cap += e.capacity;
  double c_lo = 0.0, c_hi = 0.0;
  for (int i = 0; i < ka; ++i) {
    const Commodity& c = sub.commodities.pairs[i];
    const double bcap = max_bottleneck_capacity(inst.graph, c.source, c.sink);
    c_lo = std::max(c_lo, wsub[i] * bcap / c.value);
    c_hi += wsub[i] * total_cap / c.value;
  }

  WeightedOutcome out;
  WeightedOuterResult best;
  double best_c = 0.0;

  auto probe = [&](double c) -> bool {
    ++out.probes;
    std::vector<double> factors(ka);
    for (int i = 0; i < ka; ++i) factors[i] = c / wsub[i];
    DemandMatrix d = demand_columns(sub, factors);
    WeightedOuterResult r = weighted_outer(sub, d, eps, opts, sink);
    if (!r.ok || r.max_rel_congestion > 1.0 + 3.0 * eps + 1e-9) return false;
    best = std::move(r);
    best_c = c;
    return true;
  };

  double lo = c_lo;
  bool lo_ok = probe(lo);
  for (int tries = 0; !lo_ok && tries < 8; ++tries) {
    lo *= 1.0 - 2.0 * eps;
    lo_ok = probe(lo);
  }
  if (!lo_ok) {
    out.diagnostic = "all probes failed below the crude lower bound";
    return out;
  }
  double hi = std::max(c_hi, lo * (1.0 + eps));
  const long max_probes =
      out.probes + 4 + static_cast<long>(std::ceil(std::log2(std::max(2.0, c_hi / c_lo / eps))));
  while (hi / lo > 1.0 + eps && out.probes < max_probes) {
    const double mid = std::sqrt(lo * hi);
    if (probe(mid))
      lo = mid;
    else
      hi = mid;
  }

  // Map back: commodity i routed F_i * (c/w_i) * d_i, so its original-scale
  // flow value is c * F_i / w_i and the objective is c * sum F_i = c.
  out.feasible = true;
  out.flow = MultiFlow(k, inst.m());
  out.flow_values.assign(k, 0.0);
  double objective = 0.0;
  for (int i = 0; i < ka; ++i) {
    const double fv = best_c * best.flow_values[i] / wsub[i];
    out.flow_values[active[i]] = fv;
    objective += spec.weights[active[i]] * fv;
    for (int e = 0; e < inst.m(); ++e) out.flow.at(e, active[i]) = best.flow.at(e, i);
  }
  out.objective = objective;
  out.max_rel_congestion = best.max_rel_congestion;
  return out;
}

}  // namespace mcf
