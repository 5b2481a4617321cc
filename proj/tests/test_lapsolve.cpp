#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcf/errors.hpp"
#include "mcf/lapsolve.hpp"
#include "mcf/refsolve.hpp"
#include "mcf/rng.hpp"
#include "testutil.hpp"

using namespace mcf;

namespace {

// Dense L = Gamma^T P^-1 Gamma assembled in test code through the dense
// Kronecker incidence and explicit block inversion via eigendecomposition.
std::vector<double> dense_coupled(const Graph& g, const EnergyMatrices& p) {
  const int k = p.k, dim = g.n * k;
  std::vector<double> dense(static_cast<size_t>(dim) * dim, 0.0);
  for (int e = 0; e < g.m(); ++e) {
    SymEig eig = sym_eig(p.block(e), k);
    std::vector<double> inv(static_cast<size_t>(k) * k, 0.0);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        double s = 0.0;
        for (int l = 0; l < k; ++l) s += eig.vec(i, l) * eig.vec(j, l) / eig.values[l];
        inv[static_cast<size_t>(i) * k + j] = s;
      }
    const int a = g.edges[e].tail, b = g.edges[e].head;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const double w = inv[static_cast<size_t>(i) * k + j];
        dense[static_cast<size_t>(a * k + i) * dim + a * k + j] += w;
        dense[static_cast<size_t>(b * k + i) * dim + b * k + j] += w;
        dense[static_cast<size_t>(a * k + i) * dim + b * k + j] -= w;
        dense[static_cast<size_t>(b * k + i) * dim + a * k + j] -= w;
      }
  }
  return dense;
}

Graph unit_path3() {
  Graph g;
  g.n = 3;
  g.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
  return g;
}

}  // namespace

TEST_CASE("apply_coupled on the unit path with identity blocks") {
  Graph g = unit_path3();
  CoupledOperator op(g, EnergyMatrices::identity(1, 2));
  std::vector<double> x{1.0, 0.0, -1.0};
  std::vector<double> y = op.apply(x);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(0.0));
  CHECK(y[2] == doctest::Approx(-1.0));
}

TEST_CASE("apply_coupled annihilates per-commodity constants") {
  Rng rng(3);
  Graph g = testutil::random_graph(rng, 6, 10);
  CoupledOperator op(g, testutil::random_energy(rng, 2, 10, 20.0));
  std::vector<double> x(12);
  for (int u = 0; u < 6; ++u) {
    x[u * 2] = 4.2;
    x[u * 2 + 1] = -1.7;
  }
  std::vector<double> y = op.apply(x);
  CHECK(norm_inf(y) <= 1e-12);
}

TEST_CASE("apply_coupled matches the dense assembly") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng_int(rng, 0, 6));
    const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 5));
    const int k = 1 + static_cast<int>(rng_int(rng, 0, 2));
    Graph g = testutil::random_graph(rng, n, m);
    EnergyMatrices p = testutil::random_energy(rng, k, m, 30.0);
    CoupledOperator op(g, p);
    std::vector<double> dense = dense_coupled(g, p);
    std::vector<double> x(static_cast<size_t>(n) * k);
    for (auto& v : x) v = rng_range(rng, -2.0, 2.0);
    std::vector<double> fast = op.apply(x);
    std::vector<double> ref = testutil::mat_vec(dense, n * k, n * k, x);
    for (size_t i = 0; i < ref.size(); ++i)
      CHECK(fast[i] == doctest::Approx(ref[i]).epsilon(1e-11));
  }
}

TEST_CASE("operator symmetry on random pairs") {
  Rng rng(7);
  Graph g = testutil::random_graph(rng, 7, 12);
  EnergyMatrices p = testutil::random_energy(rng, 3, 12, 50.0);
  CoupledOperator op(g, p);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> x(21), y(21);
    for (auto& v : x) v = rng_range(rng, -1.0, 1.0);
    for (auto& v : y) v = rng_range(rng, -1.0, 1.0);
    const double xy = dot(x, op.apply(y));
    const double yx = dot(y, op.apply(x));
    CHECK(std::abs(xy - yx) <= 1e-10 * (1.0 + std::abs(xy)));
  }
}

TEST_CASE("build_preconditioner scales by the smallest eigenvalue") {
  Graph g;
  g.n = 2;
  g.edges = {{0, 1, 1.0}};
  std::vector<double> blocks{2.0, 0.0, 0.0, 3.0};
  EnergyMatrices p(2, 1, blocks);
  BlockPreconditioner pre = build_preconditioner(g, p);
  CHECK(pre.lap.weights[0] == doctest::Approx(0.5));
  CHECK(pre.k == 2);
}

TEST_CASE("preconditioner equals the operator when P is the identity") {
  Rng rng(11);
  Graph g = testutil::random_graph(rng, 5, 8);
  EnergyMatrices p = EnergyMatrices::identity(2, 8);
  CoupledOperator op(g, p);
  BlockPreconditioner pre = build_preconditioner(g, p);
  std::vector<double> x(10);
  for (auto& v : x) v = rng_range(rng, -1.0, 1.0);
  project_out_commodity_constants(x, 2, 5);
  std::vector<double> lx = op.apply(x);
  double qtilde = 0.0;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> xi(5);
    for (int u = 0; u < 5; ++u) xi[u] = x[static_cast<size_t>(u) * 2 + i];
    std::vector<double> li = pre.lap.apply(xi);
    qtilde += dot(xi, li);
  }
  CHECK(dot(x, lx) == doctest::Approx(qtilde).epsilon(1e-11));
}

TEST_CASE("preconditioner sandwich holds for random blocks") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng_int(rng, 0, 5));
    const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 4));
    const int k = 1 + static_cast<int>(rng_int(rng, 0, 2));
    Graph g = testutil::random_graph(rng, n, m);
    EnergyMatrices p = testutil::random_energy(rng, k, m, 25.0);
    const double kappa = block_condition_bound(p);
    CoupledOperator op(g, p);
    BlockPreconditioner pre = build_preconditioner(g, p);
    for (int probe = 0; probe < 100; ++probe) {
      std::vector<double> x(static_cast<size_t>(n) * k);
      for (auto& v : x) v = rng_range(rng, -1.0, 1.0);
      project_out_commodity_constants(x, k, n);
      const double ql = dot(x, op.apply(x));
      double qt = 0.0;
      std::vector<double> xi(n);
      for (int i = 0; i < k; ++i) {
        for (int u = 0; u < n; ++u) xi[u] = x[static_cast<size_t>(u) * k + i];
        qt += dot(xi, pre.lap.apply(xi));
      }
      // L <= Ltilde <= kappa L (the P^-1 in L flips the order under
      // inversion relative to the block bound).
      const double ratio = qt / ql;
      CHECK(ratio >= 1.0 - 1e-9);
      CHECK(ratio <= kappa * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("laplacian_solve on the unit path") {
  ScalarLaplacian lap(unit_path3(), std::vector<double>{1.0, 1.0});
  std::vector<double> b{1.0, 0.0, -1.0};
  std::vector<double> x = laplacian_solve(lap, b, 1e-10);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(x[2] == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("laplacian_solve zero rhs") {
  ScalarLaplacian lap(unit_path3(), std::vector<double>{1.0, 1.0});
  std::vector<double> b{0.0, 0.0, 0.0};
  SolveReport rep;
  std::vector<double> x = laplacian_solve(lap, b, 1e-10, LapPreconKind::jacobi, &rep);
  CHECK(norm_inf(x) == 0.0);
  CHECK(rep.iterations == 0);
}

TEST_CASE("laplacian_solve rejects rhs with nonzero sum") {
  ScalarLaplacian lap(unit_path3(), std::vector<double>{1.0, 1.0});
  std::vector<double> b{1.0, 0.0, 0.0};
  CHECK_THROWS_AS(laplacian_solve(lap, b, 1e-10), NumericError);
}

TEST_CASE("laplacian_solve matches the dense pseudo-inverse on random graphs") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng_int(rng, 0, 7));
    const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 6));
    Graph g = testutil::random_graph(rng, n, m);
    std::vector<double> w(m);
    for (auto& v : w) v = rng_range(rng, 0.1, 5.0);
    ScalarLaplacian lap(g, w);

    std::vector<double> dense(static_cast<size_t>(n) * n, 0.0);
    for (int e = 0; e < m; ++e) {
      const int a = g.edges[e].tail, b2 = g.edges[e].head;
      dense[static_cast<size_t>(a) * n + a] += w[e];
      dense[static_cast<size_t>(b2) * n + b2] += w[e];
      dense[static_cast<size_t>(a) * n + b2] -= w[e];
      dense[static_cast<size_t>(b2) * n + a] -= w[e];
    }
    std::vector<double> b(n);
    double sum = 0.0;
    for (int u = 0; u < n; ++u) {
      b[u] = rng_range(rng, -1.0, 1.0);
      sum += b[u];
    }
    for (int u = 0; u < n; ++u) b[u] -= sum / n;

    const LapPreconKind precon = trial % 2 == 0 ? LapPreconKind::jacobi : LapPreconKind::tree;
    std::vector<double> x = laplacian_solve(lap, b, 1e-10, precon);
    std::vector<double> ref = refsolve::dense_pinv_apply(dense, n, b);
    for (int u = 0; u < n; ++u) CHECK(std::abs(x[u] - ref[u]) <= 1e-6);
  }
}

TEST_CASE("laplacian_solve is deterministic") {
  Rng rng(19);
  Graph g = testutil::random_graph(rng, 8, 14);
  std::vector<double> w(14);
  for (auto& v : w) v = rng_range(rng, 0.1, 5.0);
  ScalarLaplacian lap(g, w);
  std::vector<double> b(8);
  double sum = 0.0;
  for (auto& v : b) {
    v = rng_range(rng, -1.0, 1.0);
    sum += v;
  }
  for (auto& v : b) v -= sum / 8;
  std::vector<double> x1 = laplacian_solve(lap, b, 1e-10);
  std::vector<double> x2 = laplacian_solve(lap, b, 1e-10);
  CHECK(x1 == x2);
}

TEST_CASE("tree_solve solves the tree Laplacian exactly") {
  Rng rng(23);
  Graph g = testutil::random_graph(rng, 7, 6);  // a tree
  std::vector<double> w(6);
  for (auto& v : w) v = rng_range(rng, 0.2, 3.0);
  ScalarLaplacian lap(g, w);
  std::vector<double> b(7);
  double sum = 0.0;
  for (auto& v : b) {
    v = rng_range(rng, -1.0, 1.0);
    sum += v;
  }
  for (auto& v : b) v -= sum / 7;
  std::vector<double> x = lap.tree_solve(b);
  std::vector<double> lx = lap.apply(x);
  for (int u = 0; u < 7; ++u) CHECK(lx[u] == doctest::Approx(b[u]).epsilon(1e-10));
}

TEST_CASE("precon_cheby converges within the kappa=1 bound") {
  Rng rng(29);
  Graph g = testutil::random_graph(rng, 7, 11);
  EnergyMatrices p = EnergyMatrices::identity(2, 11);
  CoupledOperator op(g, p);
  BlockPreconditioner pre = build_preconditioner(g, p);
  std::vector<double> b(14);
  for (auto& v : b) v = rng_range(rng, -1.0, 1.0);
  project_out_commodity_constants(b, 2, 7);
  const double theta = 1e-6;
  auto [x, rep] = precon_cheby(op, pre, b, 1.0, theta);
  CHECK(rep.converged);
  CHECK(rep.iterations <= static_cast<long>(std::ceil(std::log(2.0 / theta))) + 2);
}

TEST_CASE("precon_cheby zero rhs") {
  Rng rng(31);
  Graph g = testutil::random_graph(rng, 5, 7);
  EnergyMatrices p = EnergyMatrices::identity(1, 7);
  CoupledOperator op(g, p);
  BlockPreconditioner pre = build_preconditioner(g, p);
  std::vector<double> b(5, 0.0);
  auto [x, rep] = precon_cheby(op, pre, b, 1.0, 1e-6);
  CHECK(rep.iterations == 0);
  CHECK(norm_inf(x) == 0.0);
}

TEST_CASE("precon_cheby iteration scaling across kappa") {
  Rng rng(37);
  const double theta = 1e-6;
  for (double kappa : {4.0, 25.0, 100.0}) {
    for (int trial = 0; trial < 4; ++trial) {
      const int n = 4 + static_cast<int>(rng_int(rng, 0, 4));
      const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 4));
      const int k = 2;
      Graph g = testutil::random_graph(rng, n, m);
      std::vector<double> blocks(static_cast<size_t>(m) * k * k);
      for (int e = 0; e < m; ++e) {
        std::vector<double> blk = testutil::random_pd_block(rng, k, kappa);
        std::copy(blk.begin(), blk.end(), blocks.begin() + static_cast<size_t>(e) * k * k);
      }
      EnergyMatrices p(k, m, std::move(blocks));
      CoupledOperator op(g, p);
      BlockPreconditioner pre = build_preconditioner(g, p);
      std::vector<double> b(static_cast<size_t>(n) * k);
      for (auto& v : b) v = rng_range(rng, -1.0, 1.0);
      project_out_commodity_constants(b, k, n);
      auto [x, rep] = precon_cheby(op, pre, b, kappa, theta);
      CHECK(rep.converged);
      const long bound =
          static_cast<long>(std::ceil(std::sqrt(2.0 * kappa) * std::log(2.0 / theta))) + 5;
      CHECK(rep.iterations <= bound);
    }
  }
}

TEST_CASE("precon_cg satisfies the same contract") {
  Rng rng(41);
  Graph g = testutil::random_graph(rng, 6, 10);
  EnergyMatrices p = testutil::random_energy(rng, 2, 10, 40.0);
  const double kappa = block_condition_bound(p);
  CoupledOperator op(g, p);
  BlockPreconditioner pre = build_preconditioner(g, p);
  std::vector<double> b(12);
  for (auto& v : b) v = rng_range(rng, -1.0, 1.0);
  project_out_commodity_constants(b, 2, 6);
  auto [x, rep] = precon_cg(op, pre, b, kappa, 1e-8);
  CHECK(rep.converged);
  std::vector<double> lx = op.apply(x);
  std::vector<double> r(b.size());
  for (size_t i = 0; i < b.size(); ++i) r[i] = b[i] - lx[i];
  CHECK(norm2(r) <= 1e-5 * norm2(b));
}

TEST_CASE("solve_coupled_system decouples when P is the identity") {
  Rng rng(43);
  Graph g = testutil::random_graph(rng, 6, 9);
  EnergyMatrices p = EnergyMatrices::identity(2, 9);
  DemandVector d(2, 6);
  d.at(0, 0) = -1.0;
  d.at(5, 0) = 1.0;
  d.at(2, 1) = -0.5;
  d.at(3, 1) = 0.5;
  auto [phi, rep] = solve_coupled_system(g, p, d, 1e-9);
  CHECK(rep.converged);

  ScalarLaplacian lap(g, std::vector<double>(9, 1.0));
  for (int i = 0; i < 2; ++i) {
    std::vector<double> di(6);
    for (int u = 0; u < 6; ++u) di[u] = d.at(u, i);
    std::vector<double> xi = laplacian_solve(lap, di, 1e-12);
    for (int u = 0; u < 6; ++u) CHECK(phi.at(u, i) == doctest::Approx(xi[u]).epsilon(1e-9));
  }
}

TEST_CASE("solve_coupled_system on a single edge") {
  Graph g;
  g.n = 2;
  g.edges = {{0, 1, 1.0}};
  EnergyMatrices p = EnergyMatrices::identity(1, 1);
  DemandVector d(1, 2);
  d.at(0, 0) = -1.0;
  d.at(1, 0) = 1.0;
  auto [phi, rep] = solve_coupled_system(g, p, d, 1e-9);
  CHECK(phi.at(1, 0) - phi.at(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("solve_coupled_system meets the L-norm error contract vs dense") {
  Rng rng(47);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 3 + static_cast<int>(rng_int(rng, 0, 5));
    const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 5));
    const int k = 1 + static_cast<int>(rng_int(rng, 0, 2));
    Graph g = testutil::random_graph(rng, n, m);
    EnergyMatrices p = testutil::random_energy(rng, k, m, 60.0);
    Instance inst;
    inst.graph = g;
    for (int i = 0; i < k; ++i) {
      int s = static_cast<int>(rng_int(rng, 0, n - 1));
      int t = static_cast<int>(rng_int(rng, 0, n - 2));
      if (t >= s) ++t;
      inst.commodities.pairs.push_back({s, t, rng_range(rng, 0.5, 2.0)});
    }
    DemandVector d = inst.demand_vector();
    const double delta = 1e-7;
    SolverOptions opts;
    opts.coupled_solver = trial % 2 == 0 ? CoupledSolverKind::cheby : CoupledSolverKind::cg;
    auto [phi, rep] = solve_coupled_system(g, p, d, delta, opts);
    CHECK(rep.converged);

    std::vector<double> dense = dense_coupled(g, p);
    std::vector<double> ref = refsolve::dense_pinv_apply(dense, n * k, d.v, 1e-13);
    CoupledOperator op(g, p);
    std::vector<double> diff(phi.v.size());
    for (size_t i = 0; i < diff.size(); ++i) diff[i] = phi.v[i] - ref[i];
    const double err_l = std::sqrt(std::max(0.0, dot(diff, op.apply(diff))));
    const double ref_l = std::sqrt(std::max(0.0, dot(ref, op.apply(ref))));
    CHECK(err_l <= delta * ref_l * (1.0 + 1e-6) + 1e-12);
  }
}

TEST_CASE("solve_coupled_dense agrees with the iterative path") {
  Rng rng(53);
  Graph g = testutil::random_graph(rng, 5, 8);
  EnergyMatrices p = testutil::random_energy(rng, 2, 8, 20.0);
  DemandVector d(2, 5);
  d.at(0, 0) = -1.0;
  d.at(4, 0) = 1.0;
  d.at(1, 1) = -2.0;
  d.at(2, 1) = 2.0;
  VertexPotentials dense = solve_coupled_dense(g, p, d);
  auto [iter, rep] = solve_coupled_system(g, p, d, 1e-10);
  for (size_t i = 0; i < dense.v.size(); ++i)
    CHECK(dense.v[i] == doctest::Approx(iter.v[i]).epsilon(1e-6));
}
