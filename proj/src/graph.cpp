#include "mcf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "mcf/errors.hpp"

namespace mcf {

bool Graph::connected() const {
  if (n <= 0) return false;
  if (n == 1) return true;
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e.tail].push_back(e.head);
    adj[e.head].push_back(e.tail);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int w : adj[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

void Graph::validate() const {
  if (n < 1) throw ParseError(0, "graph must have at least one vertex");
  for (size_t j = 0; j < edges.size(); ++j) {
    const auto& e = edges[j];
    if (e.tail < 0 || e.tail >= n || e.head < 0 || e.head >= n)
      throw ParseError(0, "edge " + std::to_string(j + 1) + ": vertex id out of range");
    if (e.tail == e.head)
      throw ParseError(0, "edge " + std::to_string(j + 1) + ": self-loop");
    if (!(e.capacity > 0.0) || !std::isfinite(e.capacity))
      throw ParseError(0, "edge " + std::to_string(j + 1) + ": nonpositive capacity");
  }
  if (!connected()) throw ParseError(0, "graph is disconnected");
}

DemandVector Instance::demand_vector() const {
  DemandVector d(k(), n());
  for (int i = 0; i < k(); ++i) {
    const Commodity& c = commodities.pairs[i];
    d.at(c.sink, i) += c.value;
    d.at(c.source, i) -= c.value;
  }
  return d;
}

namespace {

// Strips '#' comments and surrounding whitespace; empty result means skip.
std::string clean_line(const std::string& raw) {
  std::string s = raw;
  if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  size_t start = s.find_first_not_of(" \t");
  return start == std::string::npos ? std::string() : s.substr(start);
}

}  // namespace

Instance parse_instance(std::istream& in) {
  Instance inst;
  int n = 0, m = 0, k = 0;
  bool have_header = false;
  int arcs_seen = 0;
  std::vector<char> demand_seen;
  int demands_seen = 0;

  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = clean_line(raw);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;

    if (tag == "p") {
      if (have_header) throw ParseError(lineno, "duplicate header");
      std::string kind;
      if (!(ls >> kind >> n >> m >> k) || kind != "mcf")
        throw ParseError(lineno, "malformed header, expected 'p mcf <n> <m> <k>'");
      std::string extra;
      if (ls >> extra) throw ParseError(lineno, "trailing tokens in header");
      if (n < 1 || m < 0 || k < 1) throw ParseError(lineno, "header counts out of range");
      have_header = true;
      inst.graph.n = n;
      inst.graph.edges.reserve(m);
      inst.commodities.pairs.resize(k);
      demand_seen.assign(k, 0);
    } else if (tag == "a") {
      if (!have_header) throw ParseError(lineno, "arc line before header");
      int tail = 0, head = 0;
      double cap = 0.0;
      if (!(ls >> tail >> head >> cap)) throw ParseError(lineno, "malformed arc line");
      std::string extra;
      if (ls >> extra) throw ParseError(lineno, "trailing tokens in arc line");
      if (tail < 1 || tail > n || head < 1 || head > n)
        throw ParseError(lineno, "arc vertex id out of range");
      if (tail == head) throw ParseError(lineno, "self-loop");
      if (!(cap > 0.0) || !std::isfinite(cap)) throw ParseError(lineno, "nonpositive capacity");
      if (arcs_seen == m) throw ParseError(lineno, "edge count mismatch: more arc lines than header m");
      inst.graph.edges.push_back({tail - 1, head - 1, cap});
      ++arcs_seen;
    } else if (tag == "d") {
      if (!have_header) throw ParseError(lineno, "demand line before header");
      int idx = 0, src = 0, sink = 0;
      double value = 0.0;
      if (!(ls >> idx >> src >> sink >> value)) throw ParseError(lineno, "malformed demand line");
      std::string extra;
      if (ls >> extra) throw ParseError(lineno, "trailing tokens in demand line");
      if (idx < 1 || idx > k) throw ParseError(lineno, "commodity index out of range");
      if (demand_seen[idx - 1]) throw ParseError(lineno, "duplicate commodity index");
      if (src < 1 || src > n || sink < 1 || sink > n)
        throw ParseError(lineno, "demand vertex id out of range");
      if (src == sink) throw ParseError(lineno, "commodity source equals sink");
      if (!(value > 0.0) || !std::isfinite(value)) throw ParseError(lineno, "nonpositive demand value");
      inst.commodities.pairs[idx - 1] = {src - 1, sink - 1, value};
      demand_seen[idx - 1] = 1;
      ++demands_seen;
    } else {
      throw ParseError(lineno, "unknown line tag '" + tag + "'");
    }
  }

  if (!have_header) throw ParseError(lineno, "missing header");
  if (arcs_seen != m) throw ParseError(lineno, "edge count mismatch: header claims " + std::to_string(m) +
                                                   " arcs, found " + std::to_string(arcs_seen));
  if (demands_seen != k)
    throw ParseError(lineno, "commodity count mismatch: header claims " + std::to_string(k) +
                                 " demands, found " + std::to_string(demands_seen));
  inst.graph.validate();
  return inst;
}

Instance parse_instance_text(const std::string& text) {
  std::istringstream in(text);
  return parse_instance(in);
}

Instance parse_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open '" + path + "'");
  return parse_instance(in);
}

std::string format_instance(const Instance& inst) {
  std::ostringstream out;
  out.precision(17);
  out << "p mcf " << inst.n() << ' ' << inst.m() << ' ' << inst.k() << '\n';
  for (const auto& e : inst.graph.edges)
    out << "a " << e.tail + 1 << ' ' << e.head + 1 << ' ' << e.capacity << '\n';
  for (int i = 0; i < inst.k(); ++i) {
    const auto& c = inst.commodities.pairs[i];
    out << "d " << i + 1 << ' ' << c.source + 1 << ' ' << c.sink + 1 << ' ' << c.value << '\n';
  }
  return out.str();
}

MultiFlow incidence_apply(const Graph& g, const VertexPotentials& phi) {
  if (phi.n != g.n) throw DimensionError("incidence_apply: potential length mismatch");
  MultiFlow out(phi.k, g.m());
  for (int e = 0; e < g.m(); ++e) {
    const auto& ed = g.edges[e];
    for (int i = 0; i < phi.k; ++i) out.at(e, i) = phi.at(ed.head, i) - phi.at(ed.tail, i);
  }
  return out;
}

VertexPotentials incidence_transpose_apply(const Graph& g, const MultiFlow& f) {
  if (f.m != g.m()) throw DimensionError("incidence_transpose_apply: flow length mismatch");
  VertexPotentials out(f.k, g.n);
  for (int e = 0; e < g.m(); ++e) {
    const auto& ed = g.edges[e];
    for (int i = 0; i < f.k; ++i) {
      const double fe = f.at(e, i);
      out.at(ed.head, i) += fe;
      out.at(ed.tail, i) -= fe;
    }
  }
  return out;
}

std::vector<double> incidence_apply_scalar(const Graph& g, std::span<const double> phi) {
  if (static_cast<int>(phi.size()) != g.n)
    throw DimensionError("incidence_apply_scalar: length mismatch");
  std::vector<double> out(g.m());
  for (int e = 0; e < g.m(); ++e) out[e] = phi[g.edges[e].head] - phi[g.edges[e].tail];
  return out;
}

std::vector<double> incidence_transpose_apply_scalar(const Graph& g, std::span<const double> f) {
  if (static_cast<int>(f.size()) != g.m())
    throw DimensionError("incidence_transpose_apply_scalar: length mismatch");
  std::vector<double> out(g.n, 0.0);
  for (int e = 0; e < g.m(); ++e) {
    out[g.edges[e].head] += f[e];
    out[g.edges[e].tail] -= f[e];
  }
  return out;
}

namespace {

bool reachable_with_min_cap(const Graph& g, int s, int t, double c) {
  std::vector<std::vector<int>> adj(g.n);
  for (const auto& e : g.edges) {
    if (e.capacity >= c) {
      adj[e.tail].push_back(e.head);
      adj[e.head].push_back(e.tail);
    }
  }
  std::vector<char> seen(g.n, 0);
  std::vector<int> stack{s};
  seen[s] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (u == t) return true;
    for (int w : adj[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return false;
}

}  // namespace

double max_bottleneck_capacity(const Graph& g, int s, int t) {
  // Binary search over the sorted distinct capacities: the largest c such
  // that s reaches t using only edges of capacity >= c.
  std::vector<double> caps;
  caps.reserve(g.edges.size());
  for (const auto& e : g.edges) caps.push_back(e.capacity);
  std::sort(caps.begin(), caps.end());
  caps.erase(std::unique(caps.begin(), caps.end()), caps.end());
  if (!reachable_with_min_cap(g, s, t, caps.front()))
    throw NumericError("no path between commodity endpoints");
  int lo = 0, hi = static_cast<int>(caps.size()) - 1;
  while (lo < hi) {
    int mid = (lo + hi + 1) / 2;
    if (reachable_with_min_cap(g, s, t, caps[mid]))
      lo = mid;
    else
      hi = mid - 1;
  }
  return caps[lo];
}

std::pair<double, double> bottleneck_bounds(const Instance& inst) {
  const int k = inst.k();
  double total_cap = 0.0;
  for (const auto& e : inst.graph.edges) total_cap += e.capacity;
  double lo = std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& c : inst.commodities.pairs) {
    const double bcap = max_bottleneck_capacity(inst.graph, c.source, c.sink);
    lo = std::min(lo, bcap / (k * c.value));
    hi = std::min(hi, total_cap / c.value);
  }
  return {lo, hi};
}

}  // namespace mcf
