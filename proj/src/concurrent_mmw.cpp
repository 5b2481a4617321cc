#include "mcf/concurrent_mmw.hpp"

#include <cmath>

#include "mcf/concurrent_signs.hpp"
#include "mcf/errors.hpp"

namespace mcf {

MmwEdgeState::MmwEdgeState(int k_) : k(k_) {
  s.assign(static_cast<size_t>(k) * k, 0.0);
  w.assign(static_cast<size_t>(k) * k, 0.0);
  for (int i = 0; i < k; ++i) w[static_cast<size_t>(i) * k + i] = 1.0;
}

MmwDefaults mmw_paper_defaults(int k, double eps) {
  MmwDefaults d;
  d.rho = std::sqrt(static_cast<double>(k) / eps);
  d.eps1 = eps / (k * d.rho);
  d.eps1_prime = -std::log(1.0 - d.eps1);
  d.iterations = d.rho / (d.eps1_prime * d.eps1_prime) * std::log(static_cast<double>(std::max(k, 2)));
  return d;
}

std::vector<double> build_energy_from_w(std::span<const double> w_block, int k, double u,
                                        double eps) {
  if (static_cast<int>(w_block.size()) != k * k)
    throw DimensionError("build_energy_from_w: block size mismatch");
  double maxdiag = 0.0;
  for (int i = 0; i < k; ++i) maxdiag = std::max(maxdiag, w_block[static_cast<size_t>(i) * k + i]);
  if (!(maxdiag > 0.0)) throw NumericError("build_energy_from_w: W has no positive diagonal");
  std::vector<double> p(static_cast<size_t>(k) * k);
  const double inv_u2 = 1.0 / (u * u);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double v = w_block[static_cast<size_t>(i) * k + j] / maxdiag;
      if (i == j) v += eps;
      p[static_cast<size_t>(i) * k + j] = v * inv_u2;
    }
  return p;
}

std::pair<double, double> mmw_update(MmwEdgeState& state, std::span<const double> f_block,
                                     double u, double eps, double rho, double eps1_prime) {
  const int k = state.k;
  if (static_cast<int>(f_block.size()) != k) throw DimensionError("mmw_update: flow block size mismatch");

  // argmax over the diagonal of W, ties to the lowest commodity index
  int imax = 0;
  for (int i = 1; i < k; ++i)
    if (state.w[static_cast<size_t>(i) * k + i] > state.w[static_cast<size_t>(imax) * k + imax]) imax = i;

  // M = (1/2rho) ((1+2eps) 1_{ii} - (1/u^2) f f^T + rho I)
  std::vector<double> m(static_cast<size_t>(k) * k);
  const double inv_u2 = 1.0 / (u * u);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double v = -inv_u2 * f_block[i] * f_block[j];
      if (i == j) v += rho;
      if (i == imax && j == imax) v += 1.0 + 2.0 * eps;
      m[static_cast<size_t>(i) * k + j] = v / (2.0 * rho);
    }

  for (size_t i = 0; i < state.s.size(); ++i) state.s[i] += m[i];
  std::vector<double> neg(state.s.size());
  for (size_t i = 0; i < neg.size(); ++i) neg[i] = -eps1_prime * state.s[i];
  state.w = matrix_exp_sym(neg, k);

  SymEig eig = sym_eig(m, k);
  return {eig.values.front(), eig.values.back()};
}

namespace {

long mmw_desk_iterations(int k, double eps) {
  (void)k;
  return std::max<long>(16, static_cast<long>(std::ceil(2.0 / eps)));
}

}  // namespace

ConcurrentOutcome max_concurrent_flow(const Instance& inst, double eps, const SolverOptions& opts,
                                      TraceSink* sink) {
  if (!(eps > 0.0 && eps <= 0.5)) throw NumericError("max_concurrent_flow: eps out of range");
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
    iterations = mmw_desk_iterations(k, eps);

  const DemandVector d = inst.demand_vector();
  std::vector<MmwEdgeState> states(m, MmwEdgeState(k));
  MultiFlow sum(k, m);
  ConcurrentOutcome out;
  const double cond_limit = 2.0 * k / eps + 1e-9;

  for (long t = 1; t <= iterations; ++t) {
    std::vector<double> blocks(static_cast<size_t>(m) * k * k);
    for (int e = 0; e < m; ++e) {
      std::vector<double> pe = build_energy_from_w(states[e].w, k, inst.graph.edges[e].capacity, eps);
      std::copy(pe.begin(), pe.end(), blocks.begin() + static_cast<size_t>(e) * k * k);
    }
    EnergyMatrices p(k, m, std::move(blocks));
    const double cond = block_condition_bound(p);
    if (sink) sink->max_block_condition = std::max(sink->max_block_condition, cond);
    if (cond > cond_limit)
      throw NumericError("max_concurrent_flow: energy-matrix condition bound violated");

    CapacitatedOutcome inner = quadratically_capacitated_flow(inst.graph, p, d, eps, opts, sink);
    out.report.merge(inner.report);
    out.iterations = t;
    if (inner.status == SolveStatus::fail) {
      out.status = SolveStatus::fail;
      return out;
    }

    double max_rel = 0.0;
    bool width_ok = true;
    for (int e = 0; e < m; ++e) {
      const double u = inst.graph.edges[e].capacity;
      max_rel = std::max(max_rel, norm1(inner.flow.block(e)) / u);
      // Lemma width hypothesis f f^T <= rho u^2 I, i.e. ||f(e)||_2^2 <= rho u^2.
      const double l2sq = dot(inner.flow.block(e), inner.flow.block(e));
      if (l2sq > rho * u * u * (1.0 + 1e-9)) width_ok = false;
      mmw_update(states[e], inner.flow.block(e), u, eps, rho, eps1_prime);
    }
    if (sink) sink->outer.push_back({t, max_rel, width_ok});
    for (size_t i = 0; i < sum.v.size(); ++i) sum.v[i] += inner.flow.v[i];
  }

  out.status = SolveStatus::flow;
  out.flow = MultiFlow(k, m);
  for (size_t i = 0; i < sum.v.size(); ++i) out.flow.v[i] = sum.v[i] / static_cast<double>(iterations);
  for (int e = 0; e < m; ++e)
    out.max_rel_congestion =
        std::max(out.max_rel_congestion, norm1(out.flow.block(e)) / inst.graph.edges[e].capacity);
  return out;
}

Instance scale_instance_demands(const Instance& inst, double lambda) {
  Instance scaled = inst;
  for (auto& c : scaled.commodities.pairs) c.value *= lambda;
  return scaled;
}

namespace {

ConcurrentOutcome run_outer(const Instance& inst, double eps, const SolverOptions& opts,
                            TraceSink* sink) {
  return opts.outer == OuterKind::signs ? max_concurrent_flow_signs(inst, eps, opts, sink)
                                        : max_concurrent_flow(inst, eps, opts, sink);
}

}  // namespace

LambdaSearchResult binary_search_lambda(const Instance& inst, double eps,
                                        const SolverOptions& opts, TraceSink* sink) {
  auto [lambda_lo, lambda_hi] = bottleneck_bounds(inst);
  LambdaSearchResult res;

  auto probe = [&](double lambda) -> bool {
    ++res.probes;
    ConcurrentOutcome oc = run_outer(scale_instance_demands(inst, lambda), eps, opts, sink);
    if (oc.status != SolveStatus::flow) return false;
    if (oc.max_rel_congestion > 1.0 + 3.0 * eps + 1e-9) return false;
    res.lambda = lambda;
    res.flow = std::move(oc.flow);
    res.feasible = true;
    return true;
  };

  // The lower bound is routable in exact arithmetic; at truncated iteration
  // budgets give it a few shrinking retries before giving up.
  double lo = lambda_lo;
  bool lo_ok = probe(lo);
  for (int tries = 0; !lo_ok && tries < 8; ++tries) {
    lo *= 1.0 - 2.0 * eps;
    lo_ok = probe(lo);
  }
  if (!lo_ok) {
    res.diagnostic = "all probes failed below the bottleneck lower bound";
    res.lambda = lo;
    return res;
  }

  double hi = std::max(lambda_hi, lo * (1.0 + eps));
  const long max_probes =
      res.probes + 4 +
      static_cast<long>(std::ceil(std::log2(std::max(2.0, lambda_hi / lambda_lo / eps))));
  while (hi / lo > 1.0 + eps && res.probes < max_probes) {
    const double mid = std::sqrt(lo * hi);
    if (probe(mid))
      lo = mid;
    else
      hi = mid;
  }
  return res;
}

}  // namespace mcf
