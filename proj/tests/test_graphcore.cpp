#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcf/errors.hpp"
#include "mcf/graph.hpp"
#include "mcf/refsolve.hpp"
#include "mcf/rng.hpp"
#include "testutil.hpp"

using namespace mcf;

TEST_CASE("parse minimal instance") {
  Instance inst = parse_instance_text("p mcf 2 1 1\na 1 2 1.0\nd 1 1 2 1.0\n");
  CHECK(inst.n() == 2);
  CHECK(inst.m() == 1);
  CHECK(inst.k() == 1);
  CHECK(inst.graph.edges[0].tail == 0);
  CHECK(inst.graph.edges[0].head == 1);
  DemandVector d = inst.demand_vector();
  CHECK(d.at(0, 0) == doctest::Approx(-1.0));  // source negative
  CHECK(d.at(1, 0) == doctest::Approx(1.0));   // sink positive
}

TEST_CASE("parse accepts comments and blank lines") {
  Instance inst = parse_instance_text(
      "# a comment\n\np mcf 3 2 1  # trailing comment\na 1 2 0.5\na 2 3 2\nd 1 1 3 1\n");
  CHECK(inst.n() == 3);
  CHECK(inst.m() == 2);
}

TEST_CASE("parse errors carry line numbers") {
  // header claims two arcs, one given
  CHECK_THROWS_WITH_AS(parse_instance_text("p mcf 2 2 1\na 1 2 1.0\nd 1 1 2 1.0\n"),
                       doctest::Contains("edge count mismatch"), ParseError);
  // duplicate header
  try {
    parse_instance_text("p mcf 2 1 1\np mcf 2 1 1\na 1 2 1\nd 1 1 2 1\n");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(std::string(e.what()).find("duplicate header") != std::string::npos);
  }
  // nonpositive capacity
  try {
    parse_instance_text("p mcf 2 1 1\na 1 2 -1\nd 1 1 2 1\n");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
  // malformed arc line
  CHECK_THROWS_AS(parse_instance_text("p mcf 2 1 1\na 1 x 1\nd 1 1 2 1\n"), ParseError);
  // disconnected
  CHECK_THROWS_WITH_AS(
      parse_instance_text("p mcf 4 2 1\na 1 2 1\na 3 4 1\nd 1 1 2 1\n"),
      doctest::Contains("disconnected"), ParseError);
  // self loop
  CHECK_THROWS_AS(parse_instance_text("p mcf 2 1 1\na 2 2 1\nd 1 1 2 1\n"), ParseError);
  // duplicate commodity index
  CHECK_THROWS_AS(
      parse_instance_text("p mcf 3 2 2\na 1 2 1\na 2 3 1\nd 1 1 2 1\nd 1 2 3 1\n"), ParseError);
  // source equals sink
  CHECK_THROWS_AS(parse_instance_text("p mcf 2 1 1\na 1 2 1\nd 1 2 2 1\n"), ParseError);
  // unknown tag
  CHECK_THROWS_AS(parse_instance_text("p mcf 2 1 1\na 1 2 1\nq foo\nd 1 1 2 1\n"), ParseError);
  // missing header
  CHECK_THROWS_AS(parse_instance_text("a 1 2 1\n"), ParseError);
}

TEST_CASE("triangle k=2 file demand blocks sum to zero") {
  Instance inst = parse_instance_text(
      "p mcf 3 3 2\na 1 2 1\na 2 3 1\na 1 3 1\nd 1 1 2 1.5\nd 2 3 1 0.25\n");
  CHECK(inst.k() == 2);
  DemandVector d = inst.demand_vector();
  for (int i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (int u = 0; u < 3; ++u) sum += d.at(u, i);
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("format round-trips through parse") {
  Rng rng(11);
  Instance inst = testutil::random_instance(rng, 6, 9, 3);
  Instance back = parse_instance_text(format_instance(inst));
  CHECK(back.n() == inst.n());
  CHECK(back.m() == inst.m());
  CHECK(back.k() == inst.k());
  for (int e = 0; e < inst.m(); ++e)
    CHECK(back.graph.edges[e].capacity == doctest::Approx(inst.graph.edges[e].capacity));
}

TEST_CASE("incidence on a single edge") {
  Graph g;
  g.n = 2;
  g.edges = {{0, 1, 1.0}};
  VertexPotentials phi(1, 2);
  phi.at(0, 0) = 1.0;
  phi.at(1, 0) = 0.0;
  MultiFlow out = incidence_apply(g, phi);
  CHECK(out.at(0, 0) == doctest::Approx(-1.0));

  MultiFlow f(1, 1);
  f.at(0, 0) = 1.0;
  VertexPotentials excess = incidence_transpose_apply(g, f);
  CHECK(excess.at(0, 0) == doctest::Approx(-1.0));
  CHECK(excess.at(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("incidence annihilates per-commodity constants") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = testutil::random_graph(rng, 2 + static_cast<int>(rng_int(rng, 0, 6)), 12);
    const int k = 1 + static_cast<int>(rng_int(rng, 0, 2));
    VertexPotentials phi(k, g.n);
    for (int i = 0; i < k; ++i) {
      const double c = rng_range(rng, -3.0, 3.0);
      for (int u = 0; u < g.n; ++u) phi.at(u, i) = c;
    }
    MultiFlow out = incidence_apply(g, phi);
    CHECK(norm_inf(out.v) == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("circulation around a triangle has zero excess") {
  Graph g;
  g.n = 3;
  g.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}};
  MultiFlow f(1, 3);
  f.at(0, 0) = f.at(1, 0) = f.at(2, 0) = 2.5;
  VertexPotentials excess = incidence_transpose_apply(g, f);
  CHECK(norm_inf(excess.v) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("incidence operators match dense Kronecker assembly") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng_int(rng, 0, 8));
    const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 6));
    const int k = 1 + static_cast<int>(rng_int(rng, 0, 2));
    Graph g = testutil::random_graph(rng, n, m);
    std::vector<double> dense = testutil::dense_incidence(g, k);

    VertexPotentials phi(k, n);
    for (auto& v : phi.v) v = rng_range(rng, -2.0, 2.0);
    MultiFlow fast = incidence_apply(g, phi);
    std::vector<double> ref = testutil::mat_vec(dense, m * k, n * k, phi.v);
    for (size_t i = 0; i < ref.size(); ++i) CHECK(fast.v[i] == doctest::Approx(ref[i]).epsilon(1e-12));

    MultiFlow f(k, m);
    for (auto& v : f.v) v = rng_range(rng, -2.0, 2.0);
    VertexPotentials fastT = incidence_transpose_apply(g, f);
    std::vector<double> refT = testutil::mat_transpose_vec(dense, m * k, n * k, f.v);
    for (size_t i = 0; i < refT.size(); ++i)
      CHECK(fastT.v[i] == doctest::Approx(refT[i]).epsilon(1e-12));

    //

    // composition Gamma^T Gamma phi matches the dense product
    VertexPotentials lphi = incidence_transpose_apply(g, incidence_apply(g, phi));
    std::vector<double> refL =
        testutil::mat_transpose_vec(dense, m * k, n * k, testutil::mat_vec(dense, m * k, n * k, phi.v));
    for (size_t i = 0; i < refL.size(); ++i)
      CHECK(lphi.v[i] == doctest::Approx(refL[i]).epsilon(1e-12));
  }
}

TEST_CASE("bottleneck bounds on the single edge") {
  Instance inst = testutil::single_edge_instance(1.0, 1.0);
  auto [lo, hi] = bottleneck_bounds(inst);
  CHECK(lo == doctest::Approx(1.0));
  CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("bottleneck bounds on the triangle") {
  Instance inst = testutil::triangle_instance(1);
  auto [lo, hi] = bottleneck_bounds(inst);
  CHECK(lo == doctest::Approx(1.0));
  CHECK(hi == doctest::Approx(3.0));
}

TEST_CASE("bottleneck bounds, triangle with three opposing pairs") {
  Instance inst = testutil::triangle_instance(3);
  auto [lo, hi] = bottleneck_bounds(inst);
  CHECK(lo == doctest::Approx(1.0 / 3.0));
  CHECK(hi == doctest::Approx(3.0));
}

TEST_CASE("max bottleneck capacity picks the best path") {
  // 0-1 direct with cap 1, 0-2-1 with caps 5 and 4: bottleneck is 4.
  Graph g;
  g.n = 3;
  g.edges = {{0, 1, 1.0}, {0, 2, 5.0}, {2, 1, 4.0}};
  CHECK(max_bottleneck_capacity(g, 0, 1) == doctest::Approx(4.0));
}

TEST_CASE("bottleneck bounds bracket the LP optimum") {
  Rng rng(23);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 3 + static_cast<int>(rng_int(rng, 0, 4));
    const int m = (n - 1) + static_cast<int>(rng_int(rng, 0, 4));
    const int k = 1 + static_cast<int>(rng_int(rng, 0, 2));
    Instance inst = testutil::random_instance(rng, n, m, k);
    auto [lo, hi] = bottleneck_bounds(inst);
    CHECK(lo <= hi + 1e-12);
    const double star = refsolve::lp_concurrent_oracle(inst);
    CHECK(lo <= star * (1.0 + 1e-9) + 1e-12);
    CHECK(star <= hi * (1.0 + 1e-9));
  }
}
