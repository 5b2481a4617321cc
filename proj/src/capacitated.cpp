#include "mcf/capacitated.hpp"

#include <cmath>

#include "mcf/errors.hpp"

namespace mcf {

PaperDefaults capacitated_paper_defaults(int m, double eps) {
  PaperDefaults d;
  d.rho = 10.0 * std::pow(static_cast<double>(m), 1.0 / 3.0) * std::pow(eps, -2.0 / 3.0);
  d.iterations = 20.0 * d.rho * std::log(static_cast<double>(m)) * std::pow(eps, -2.0);
  return d;
}

namespace {

long desk_iterations(int m, double eps) {
  return std::max<long>(30, static_cast<long>(std::ceil(1.5 * std::log(m + 1.0) / eps)));
}

}  // namespace

EnergyMatrices reweigh(const EnergyMatrices& p, std::span<const double> w, double mu, double eps) {
  if (static_cast<int>(w.size()) != p.m) throw DimensionError("reweigh: weight count mismatch");
  std::vector<double> blocks(p.blocks);
  const double shift = eps / static_cast<double>(p.m) * mu;
  for (int e = 0; e < p.m; ++e) {
    const double s = w[e] + shift;
    double* b = blocks.data() + static_cast<size_t>(e) * p.k * p.k;
    for (int j = 0; j < p.k * p.k; ++j) b[j] *= s;
  }
  EnergyMatrices out;
  out.k = p.k;
  out.m = p.m;
  out.blocks = std::move(blocks);
  // Scalar scaling: the cached extremes scale along, no re-eigensolve.
  out.lambda_min.resize(p.m);
  out.lambda_max.resize(p.m);
  for (int e = 0; e < p.m; ++e) {
    const double s = w[e] + shift;
    out.lambda_min[e] = p.lambda_min[e] * s;
    out.lambda_max[e] = p.lambda_max[e] * s;
  }
  return out;
}

std::vector<double> update_weights(std::span<const double> w, std::span<const double> saturations,
                                   double eps, double rho) {
  if (w.size() != saturations.size()) throw DimensionError("update_weights: size mismatch");
  std::vector<double> out(w.size());
  for (size_t e = 0; e < w.size(); ++e) out[e] = w[e] * (1.0 + eps / rho * saturations[e]);
  return out;
}

std::pair<EnergyMatrices, double> normalize_blocks(const EnergyMatrices& p) {
  double lmin = p.lambda_min[0];
  for (int e = 1; e < p.m; ++e) lmin = std::min(lmin, p.lambda_min[e]);
  if (!(lmin > 0.0)) throw NumericError("normalize_blocks: blocks not PD");
  EnergyMatrices out;
  out.k = p.k;
  out.m = p.m;
  out.blocks = p.blocks;
  for (double& v : out.blocks) v /= lmin;
  out.lambda_min.resize(p.m);
  out.lambda_max.resize(p.m);
  for (int e = 0; e < p.m; ++e) {
    out.lambda_min[e] = p.lambda_min[e] / lmin;
    out.lambda_max[e] = p.lambda_max[e] / lmin;
  }
  return {std::move(out), lmin};
}

CapacitatedOutcome quadratically_capacitated_flow_with_oracle(
    const Graph& g, const EnergyMatrices& p, double eps, const CoupledOracle& oracle,
    const SolverOptions& opts, TraceSink* sink) {
  const int m = g.m();
  if (p.m != m) throw DimensionError("quadratically_capacitated_flow: block count mismatch");
  if (!(eps > 0.0 && eps <= 0.5)) throw NumericError("quadratically_capacitated_flow: eps out of range");

  const PaperDefaults paper = capacitated_paper_defaults(m, eps);
  const double rho = opts.rho_inner > 0 ? opts.rho_inner : paper.rho;
  long iterations;
  if (opts.n_inner > 0)
    iterations = opts.n_inner;
  else if (opts.paper_faithful)
    iterations = std::max<long>(1, static_cast<long>(std::ceil(paper.iterations)));
  else
    iterations = desk_iterations(m, eps);

  CapacitatedOutcome out;
  std::vector<double> w(m, 1.0);
  MultiFlow sum(p.k, m);
  std::vector<double> sats(m);

  for (long t = 1; t <= iterations; ++t) {
    double mu = 0.0;
    for (double v : w) mu += v;
    EnergyMatrices reweighed = reweigh(p, w, mu, eps);
    const double delta = eps / static_cast<double>(m);

    MultiFlow f = oracle(reweighed, delta);
    if (sink) ++sink->coupled_calls;

    const double oracle_energy = energy(reweighed, f);
    out.total_iterations = t;
    if (oracle_energy > mu * (1.0 + 1e-12)) {
      out.status = SolveStatus::fail;
      out.accepted.push_back(0);
      if (sink) sink->capacitated.push_back({t, mu, 0.0, false});
      return out;
    }

    double max_sat = 0.0;
    for (int e = 0; e < m; ++e) {
      sats[e] = saturation(reweighed, e, f);
      max_sat = std::max(max_sat, sats[e]);
    }
    const bool accept = max_sat <= rho;
    if (accept) {
      for (size_t i = 0; i < sum.v.size(); ++i) sum.v[i] += f.v[i];
      ++out.accepted_iterations;
    }
    out.accepted.push_back(accept ? 1 : 0);
    if (sink) sink->capacitated.push_back({t, mu, max_sat, accept});

    std::vector<double> w_next = update_weights(w, sats, eps, rho);
    for (int e = 0; e < m; ++e) {
      if (w_next[e] < w[e]) throw NumericError("quadratically_capacitated_flow: weight decreased");
    }
    w = std::move(w_next);
  }

  if (out.accepted_iterations == 0)
    throw NumericError("quadratically_capacitated_flow: width never satisfied");

  out.status = SolveStatus::flow;
  out.flow = MultiFlow(p.k, m);
  for (size_t i = 0; i < sum.v.size(); ++i)
    out.flow.v[i] = sum.v[i] / static_cast<double>(out.accepted_iterations);
  for (int e = 0; e < m; ++e)
    out.max_saturation = std::max(out.max_saturation, saturation(p, e, out.flow));
  return out;
}

CapacitatedOutcome quadratically_capacitated_flow(const Graph& g, const EnergyMatrices& p,
                                                  const DemandVector& d, double eps,
                                                  const SolverOptions& opts, TraceSink* sink) {
  SolveReport merged;
  CoupledOracle oracle = [&](const EnergyMatrices& reweighed, double delta) {
    auto [norm, scale] = normalize_blocks(reweighed);
    double u_bound = 0.0;
    for (int e = 0; e < norm.m; ++e) u_bound = std::max(u_bound, norm.lambda_max[e]);
    const double kappa = block_condition_bound(norm);
    CoupledResult res = quadratically_coupled_flow(g, norm, d, delta, u_bound, kappa, opts);
    merged.merge(res.report);
    if (sink) sink->outer_solver_iterations += res.report.iterations;
    return std::move(res.flow);
  };
  CapacitatedOutcome out = quadratically_capacitated_flow_with_oracle(g, p, eps, oracle, opts, sink);
  out.report = merged;
  return out;
}

}  // namespace mcf
