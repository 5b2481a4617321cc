#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace mcf {

// A k-commodity flow, stored edge-major: entry (e, i) is the flow of
// commodity i on edge e. f.block(e) is the length-k vector of all commodities
// on one edge; f.commodity(i) is materialized on demand (strided).
struct MultiFlow {
  int k = 0;
  int m = 0;
  std::vector<double> v;

  MultiFlow() = default;
  MultiFlow(int k_, int m_) : k(k_), m(m_), v(static_cast<size_t>(k_) * m_, 0.0) {}

  double& at(int e, int i) { return v[static_cast<size_t>(e) * k + i]; }
  double at(int e, int i) const { return v[static_cast<size_t>(e) * k + i]; }

  std::span<double> block(int e) { return {v.data() + static_cast<size_t>(e) * k, static_cast<size_t>(k)}; }
  std::span<const double> block(int e) const {
    return {v.data() + static_cast<size_t>(e) * k, static_cast<size_t>(k)};
  }

  std::vector<double> commodity(int i) const {
    std::vector<double> out(m);
    for (int e = 0; e < m; ++e) out[e] = at(e, i);
    return out;
  }
  void set_commodity(int i, std::span<const double> fi) {
    assert(static_cast<int>(fi.size()) == m);
    for (int e = 0; e < m; ++e) at(e, i) = fi[e];
  }
};

// Per-(vertex, commodity) potentials, vertex-major: entry (u, i) is the
// potential of commodity i at vertex u.
struct VertexPotentials {
  int k = 0;
  int n = 0;
  std::vector<double> v;

  VertexPotentials() = default;
  VertexPotentials(int k_, int n_) : k(k_), n(n_), v(static_cast<size_t>(k_) * n_, 0.0) {}

  double& at(int u, int i) { return v[static_cast<size_t>(u) * k + i]; }
  double at(int u, int i) const { return v[static_cast<size_t>(u) * k + i]; }

  std::span<double> block(int u) { return {v.data() + static_cast<size_t>(u) * k, static_cast<size_t>(k)}; }
  std::span<const double> block(int u) const {
    return {v.data() + static_cast<size_t>(u) * k, static_cast<size_t>(k)};
  }
};

// Vertex-major demand vector; per commodity the entries sum to zero.
// Convention: d_i(sink) = +value, d_i(source) = -value.
struct DemandVector {
  int k = 0;
  int n = 0;
  std::vector<double> v;

  DemandVector() = default;
  DemandVector(int k_, int n_) : k(k_), n(n_), v(static_cast<size_t>(k_) * n_, 0.0) {}

  double& at(int u, int i) { return v[static_cast<size_t>(u) * k + i]; }
  double at(int u, int i) const { return v[static_cast<size_t>(u) * k + i]; }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_inf(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x));
  return s;
}

inline double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

inline double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += std::abs(x);
  return s;
}

}  // namespace mcf
