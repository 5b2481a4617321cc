#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcf/capacitated.hpp"
#include "mcf/coupled.hpp"
#include "mcf/errors.hpp"
#include "mcf/refsolve.hpp"
#include "mcf/rng.hpp"
#include "testutil.hpp"

using namespace mcf;

namespace {

double conservation_residual(const Graph& g, const MultiFlow& f, const DemandVector& d) {
  VertexPotentials excess = incidence_transpose_apply(g, f);
  double r = 0.0;
  for (size_t i = 0; i < excess.v.size(); ++i) r = std::max(r, std::abs(excess.v[i] - d.v[i]));
  return r;
}

}  // namespace

TEST_CASE("coupled flow on a single unit edge routes one unit at energy one") {
  Graph g;
  g.n = 2;
  g.edges = {{0, 1, 1.0}};
  EnergyMatrices p = EnergyMatrices::identity(1, 1);
  DemandVector d(1, 2);
  d.at(0, 0) = -1.0;
  d.at(1, 0) = 1.0;
  CoupledResult res = quadratically_coupled_flow(g, p, d, 1e-3, 1.0, 1.0);
  CHECK(res.flow.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.energy == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("coupled flow through two series edges has energy two") {
  Graph g;
  g.n = 3;
  g.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
  EnergyMatrices p = EnergyMatrices::identity(1, 2);
  DemandVector d(1, 3);
  d.at(0, 0) = -1.0;
  d.at(2, 0) = 1.0;
  CoupledResult res = quadratically_coupled_flow(g, p, d, 1e-3, 1.0, 1.0);
  CHECK(res.energy == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("coupled flow rejects unnormalized blocks") {
  Graph g;
  g.n = 2;
  g.edges = {{0, 1, 1.0}};
  std::vector<double> w{0.25};
  EnergyMatrices p = EnergyMatrices::scalar(1, w);
  DemandVector d(1, 2);
  d.at(0, 0) = -1.0;
  d.at(1, 0) = 1.0;
  CHECK_THROWS_AS(quadratically_coupled_flow(g, p, d, 1e-3, 1.0, 1.0), NumericError);
}

TEST_CASE("make_kirchhoff leaves a conserving flow unchanged") {
  Rng rng(3);
  Graph g = testutil::random_graph(rng, 6, 9);
  // route 1 unit 0 -> 5 along an exact repair of the zero flow, then repair again
  std::vector<double> demand(6, 0.0);
  demand[0] = -1.0;
  demand[5] = 1.0;
  std::vector<double> f0(9, 0.0);
  std::vector<double> f1 = make_kirchhoff(g, demand, f0);
  std::vector<double> f2 = make_kirchhoff(g, demand, f1);
  for (int e = 0; e < 9; ++e) CHECK(f1[e] == doctest::Approx(f2[e]).epsilon(1e-14));
}

TEST_CASE("make_kirchhoff routes along the tree from a leaf") {
  // star: 0 center; edges 0-1, 0-2, 0-3; route 1 unit from 3 to 1
  Graph g;
  g.n = 4;
  g.edges = {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}};
  std::vector<double> demand(4, 0.0);
  demand[3] = -1.0;
  demand[1] = 1.0;
  std::vector<double> f = make_kirchhoff(g, demand, std::vector<double>(3, 0.0));
  CHECK(f[0] == doctest::Approx(1.0));   // 0 -> 1 carries +1
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(-1.0));  // 0 -> 3 carries -1 (flow 3 -> 0)
  std::vector<double> excess = incidence_transpose_apply_scalar(g, f);
  for (int u = 0; u < 4; ++u) CHECK(excess[u] == doctest::Approx(demand[u]));
}

TEST_CASE("make_kirchhoff repairs a violating flow within the m*gamma bound") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng_int(rng, 0, 6));
    const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 6));
    Graph g = testutil::random_graph(rng, n, m);
    std::vector<double> demand(n, 0.0);
    demand[0] = -2.0;
    demand[n - 1] = 2.0;
    std::vector<double> f(m);
    for (auto& v : f) v = rng_range(rng, -1.5, 1.5);
    std::vector<double> excess = incidence_transpose_apply_scalar(g, f);
    double gamma = 0.0;
    for (int u = 0; u < n; ++u) gamma = std::max(gamma, std::abs(excess[u] - demand[u]));

    std::vector<double> repaired = make_kirchhoff(g, demand, f);
    std::vector<double> after = incidence_transpose_apply_scalar(g, repaired);
    for (int u = 0; u < n; ++u) CHECK(std::abs(after[u] - demand[u]) <= 1e-10);
    for (int e = 0; e < m; ++e) CHECK(std::abs(repaired[e] - f[e]) <= m * gamma * (1.0 + 1e-9));
  }
}

TEST_CASE("coupled flow matches the dense oracle across random instances") {
  Rng rng(7);
  const double delta = 1e-3;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + static_cast<int>(rng_int(rng, 0, 5));
    const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 5));
    const int k = 1 + static_cast<int>(rng_int(rng, 0, 2));
    Instance inst = testutil::random_instance(rng, n, m, k);
    const Graph& g = inst.graph;
    auto [p, scale] = normalize_blocks(testutil::random_energy(rng, k, m, 50.0));
    DemandVector d = inst.demand_vector();
    double u_bound = 0.0;
    for (int e = 0; e < m; ++e) u_bound = std::max(u_bound, p.lambda_max[e]);
    const double kappa = block_condition_bound(p);

    CoupledResult res = quadratically_coupled_flow(g, p, d, delta, u_bound, kappa);
    refsolve::DenseCoupledResult ref = refsolve::dense_coupled_oracle(g, p, d);

    // Thm guarantee 1: exact conservation after repair
    CHECK(conservation_residual(g, res.flow, d) <= 1e-8 * std::max(1.0, norm_inf(d.v)));
    // Thm guarantee 2: energy within (1 + delta) of optimal
    CHECK(res.energy >= ref.energy * (1.0 - 1e-9));
    CHECK(res.energy <= ref.energy * (1.0 + delta));
    // Thm guarantee 3: per-edge energy deviation
    for (int e = 0; e < m; ++e) {
      const double diff = std::abs(energy_edge(p, e, res.flow) - energy_edge(p, e, ref.flow));
      CHECK(diff <= delta * ref.energy + 1e-12);
    }
    // Thm guarantee 4: potential feasibility and dual objective
    CoupledOperator op(g, p);
    const double pot_energy = dot(res.potentials.v, op.apply(res.potentials.v));
    CHECK(pot_energy <= 1.0 + 1e-9);
    const double dual_obj = dot(d.v, res.potentials.v);
    CHECK(dual_obj >= (1.0 - delta) * std::sqrt(ref.energy) * (1.0 - 1e-9));
  }
}

TEST_CASE("duality gap |energy - scale^2| stays within 3 delta") {
  Rng rng(11);
  const double delta = 1e-3;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng_int(rng, 0, 4));
    const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 4));
    const int k = 1 + static_cast<int>(rng_int(rng, 0, 2));
    Instance inst = testutil::random_instance(rng, n, m, k);
    auto [p, scale] = normalize_blocks(testutil::random_energy(rng, k, m, 30.0));
    DemandVector d = inst.demand_vector();
    double u_bound = 0.0;
    for (int e = 0; e < m; ++e) u_bound = std::max(u_bound, p.lambda_max[e]);
    CoupledResult res =
        quadratically_coupled_flow(inst.graph, p, d, delta, u_bound, block_condition_bound(p));
    const double lam2 = res.scale * res.scale;
    CHECK(std::abs(res.energy - lam2) <= 3.0 * delta * lam2 + 1e-12);
  }
}

TEST_CASE("no feasible flow beats the oracle energy by more than (1+delta)") {
  Rng rng(13);
  const double delta = 1e-3;
  const int n = 6, m = 10, k = 2;
  Instance inst = testutil::random_instance(rng, n, m, k);
  const Graph& g = inst.graph;
  auto [p, scale] = normalize_blocks(testutil::random_energy(rng, k, m, 40.0));
  DemandVector d = inst.demand_vector();
  double u_bound = 0.0;
  for (int e = 0; e < m; ++e) u_bound = std::max(u_bound, p.lambda_max[e]);
  CoupledResult res = quadratically_coupled_flow(g, p, d, delta, u_bound, block_condition_bound(p));

  refsolve::DenseCoupledResult ref = refsolve::dense_coupled_oracle(g, p, d);
  for (int trial = 0; trial < 50; ++trial) {
    MultiFlow h = ref.flow;
    for (int i = 0; i < k; ++i) {
      std::vector<double> circ = testutil::random_circulation(rng, g);
      for (int e = 0; e < m; ++e) h.at(e, i) += circ[e];
    }
    CHECK(conservation_residual(g, h, d) <= 1e-8);
    CHECK(energy(p, h) >= energy(p, res.flow) / (1.0 + delta) - 1e-12);
  }
}

TEST_CASE("paper-faithful mode falls back to the dense solve") {
  Rng rng(17);
  Instance inst = testutil::random_instance(rng, 5, 8, 2);
  auto [p, scale] = normalize_blocks(testutil::random_energy(rng, 2, 8, 20.0));
  DemandVector d = inst.demand_vector();
  double u_bound = 0.0;
  for (int e = 0; e < 8; ++e) u_bound = std::max(u_bound, p.lambda_max[e]);
  SolverOptions opts;
  opts.paper_faithful = true;
  CoupledResult res =
      quadratically_coupled_flow(inst.graph, p, d, 1e-3, u_bound, block_condition_bound(p), opts);
  refsolve::DenseCoupledResult ref = refsolve::dense_coupled_oracle(inst.graph, p, d);
  CHECK(res.energy == doctest::Approx(ref.energy).epsilon(1e-6));
}
