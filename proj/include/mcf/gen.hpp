#pragma once

#include <cstdint>
#include <string>

#include "mcf/graph.hpp"

namespace mcf {

struct GenConfig {
  std::uint64_t seed = 1;
  int n = 6;
  int m = 9;
  int k = 2;
  std::string profile = "uniform";  // uniform | planted
  double eps = 0.1;                 // planted congestion margin 1 - 2*eps
};

// Deterministic random instance: a random spanning tree plus extra edges.
// The "planted" profile routes each commodity along a path first and sets
// capacities so that the planted flow has congestion at most 1 - 2*eps,
// guaranteeing a concurrent optimum of at least 1.
Instance gen_instance(const GenConfig& cfg);

}  // namespace mcf
