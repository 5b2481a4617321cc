#include "mcf/gen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "mcf/errors.hpp"
#include "mcf/rng.hpp"

namespace mcf {

Instance gen_instance(const GenConfig& cfg) {
  if (cfg.n < 2 || cfg.k < 1 || cfg.m < cfg.n - 1)
    throw NumericError("gen_instance: infeasible parameters (need n >= 2, k >= 1, m >= n-1)");
  if (cfg.profile != "uniform" && cfg.profile != "planted")
    throw NumericError("gen_instance: unknown profile '" + cfg.profile + "'");
  Rng rng(cfg.seed);

  Instance inst;
  inst.graph.n = cfg.n;

  // Random spanning tree: attach each vertex of a random permutation to an
  // earlier one; then extra edges between random distinct pairs.
  std::vector<int> perm(cfg.n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = cfg.n - 1; i > 0; --i) std::swap(perm[i], perm[rng_int(rng, 0, i)]);
  for (int i = 1; i < cfg.n; ++i) {
    const int parent = perm[rng_int(rng, 0, i - 1)];
    inst.graph.edges.push_back({std::min(parent, perm[i]), std::max(parent, perm[i]), 1.0});
  }
  for (int e = cfg.n - 1; e < cfg.m; ++e) {
    int a = static_cast<int>(rng_int(rng, 0, cfg.n - 1));
    int b = static_cast<int>(rng_int(rng, 0, cfg.n - 2));
    if (b >= a) ++b;
    inst.graph.edges.push_back({std::min(a, b), std::max(a, b), 1.0});
  }

  for (int i = 0; i < cfg.k; ++i) {
    int s = static_cast<int>(rng_int(rng, 0, cfg.n - 1));
    int t = static_cast<int>(rng_int(rng, 0, cfg.n - 2));
    if (t >= s) ++t;
    const double value = rng_range(rng, 0.5, 2.0);
    inst.commodities.pairs.push_back({s, t, value});
  }

  if (cfg.profile == "uniform") {
    for (auto& e : inst.graph.edges) e.capacity = rng_range(rng, 1.0, 10.0);
  } else {
    // Route each commodity along the BFS path and size capacities so the
    // planted flow's L1 congestion stays below 1 - 2*eps.
    std::vector<double> load(cfg.m, 0.0);
    std::vector<std::vector<std::pair<int, int>>> adj(cfg.n);
    for (int e = 0; e < cfg.m; ++e) {
      adj[inst.graph.edges[e].tail].push_back({inst.graph.edges[e].head, e});
      adj[inst.graph.edges[e].head].push_back({inst.graph.edges[e].tail, e});
    }
    for (const auto& c : inst.commodities.pairs) {
      std::vector<int> prev_edge(cfg.n, -1), prev(cfg.n, -1);
      std::vector<char> seen(cfg.n, 0);
      std::queue<int> q;
      q.push(c.source);
      seen[c.source] = 1;
      while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (u == c.sink) break;
        for (auto [w, e] : adj[u]) {
          if (!seen[w]) {
            seen[w] = 1;
            prev[w] = u;
            prev_edge[w] = e;
            q.push(w);
          }
        }
      }
      for (int u = c.sink; u != c.source; u = prev[u]) load[prev_edge[u]] += c.value;
    }
    const double margin = 1.0 - 2.0 * cfg.eps;
    for (int e = 0; e < cfg.m; ++e) {
      inst.graph.edges[e].capacity =
          load[e] > 0.0 ? load[e] / margin : rng_range(rng, 1.0, 10.0);
    }
  }

  inst.graph.validate();
  return inst;
}

}  // namespace mcf
