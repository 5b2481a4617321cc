#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mcf/types.hpp"

namespace mcf {

struct EdgeRec {
  int tail = 0;
  int head = 0;
  double capacity = 0.0;
};

// Undirected capacitated graph with a fixed orientation per edge (input
// order). Vertex ids are 0-based internally, 1-based in instance files.
struct Graph {
  int n = 0;
  std::vector<EdgeRec> edges;

  int m() const { return static_cast<int>(edges.size()); }
  bool connected() const;
  // Throws ParseError (line 0) on self-loops, bad ids, nonpositive
  // capacities, or a disconnected graph.
  void validate() const;
};

struct Commodity {
  int source = 0;
  int sink = 0;
  double value = 0.0;
};

struct CommoditySpec {
  std::vector<Commodity> pairs;
  int k() const { return static_cast<int>(pairs.size()); }
};

struct Instance {
  Graph graph;
  CommoditySpec commodities;

  int n() const { return graph.n; }
  int m() const { return graph.m(); }
  int k() const { return commodities.k(); }

  // Sink-positive demands: d_i(t_i) = +value, d_i(s_i) = -value.
  DemandVector demand_vector() const;
};

// Parses the line-oriented instance format:
//   p mcf <n> <m> <k>     exactly one header, first non-comment line
//   a <tail> <head> <cap> m arc lines, 1-based ids
//   d <i> <src> <sink> <value> one line per commodity, i in [1, k]
// '#' starts a comment. Throws ParseError with the offending line number.
Instance parse_instance(std::istream& in);
Instance parse_instance_text(const std::string& text);
Instance parse_instance_file(const std::string& path);

// Serializes back to the file format (used by the generator).
std::string format_instance(const Instance& inst);

// Gamma_global * phi: per edge e=(t,h) and commodity i the entry is
// phi_i(h) - phi_i(t).
MultiFlow incidence_apply(const Graph& g, const VertexPotentials& phi);

// Gamma_global^T * f: per-vertex, per-commodity net excess. Routing v units
// tail->head puts -v at the tail and +v at the head.
VertexPotentials incidence_transpose_apply(const Graph& g, const MultiFlow& f);

// Scalar (single-commodity) counterparts used by the Laplacian layer.
std::vector<double> incidence_apply_scalar(const Graph& g, std::span<const double> phi);
std::vector<double> incidence_transpose_apply_scalar(const Graph& g, std::span<const double> f);

// Capacity of the max-bottleneck s-t path (the path maximizing the minimum
// edge capacity along it).
double max_bottleneck_capacity(const Graph& g, int s, int t);

// Crude bounds lambda_lo <= lambda* <= lambda_hi on the concurrent-flow
// optimum:
//   lambda_lo = min_i bcap_i / (k * v_i)
//   lambda_hi = min_i (sum_e u(e)) / v_i
std::pair<double, double> bottleneck_bounds(const Instance& inst);

}  // namespace mcf
