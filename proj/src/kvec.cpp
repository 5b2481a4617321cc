#include "mcf/kvec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcf/errors.hpp"

namespace mcf {

namespace {

constexpr double kAsymTol = 1e-10;

double max_abs(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace

SymEig sym_eig(std::span<const double> a, int dim) {
  if (static_cast<int>(a.size()) != dim * dim)
    throw DimensionError("sym_eig: matrix size mismatch");
  const double scale = std::max(1.0, max_abs(a));
  std::vector<double> w(a.begin(), a.end());
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      const double aij = w[i * dim + j], aji = w[j * dim + i];
      if (std::abs(aij - aji) > kAsymTol * scale)
        throw NumericError("sym_eig: input is not symmetric");
      const double s = 0.5 * (aij + aji);
      w[i * dim + j] = s;
      w[j * dim + i] = s;
    }
  }

  SymEig out;
  out.dim = dim;
  out.vectors.assign(static_cast<size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) out.vectors[static_cast<size_t>(i) * dim + i] = 1.0;

  // Cyclic Jacobi sweeps until the off-diagonal mass is negligible.
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < dim; ++p)
      for (int q = p + 1; q < dim; ++q) off += w[p * dim + q] * w[p * dim + q];
    if (off <= 1e-28 * scale * scale) break;
    for (int p = 0; p < dim; ++p) {
      for (int q = p + 1; q < dim; ++q) {
        const double apq = w[p * dim + q];
        if (std::abs(apq) <= 1e-16 * scale) continue;
        const double app = w[p * dim + p], aqq = w[q * dim + q];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int r = 0; r < dim; ++r) {
          const double wrp = w[r * dim + p], wrq = w[r * dim + q];
          w[r * dim + p] = c * wrp - s * wrq;
          w[r * dim + q] = s * wrp + c * wrq;
        }
        for (int r = 0; r < dim; ++r) {
          const double wpr = w[p * dim + r], wqr = w[q * dim + r];
          w[p * dim + r] = c * wpr - s * wqr;
          w[q * dim + r] = s * wpr + c * wqr;
        }
        for (int r = 0; r < dim; ++r) {
          const double vrp = out.vectors[static_cast<size_t>(r) * dim + p];
          const double vrq = out.vectors[static_cast<size_t>(r) * dim + q];
          out.vectors[static_cast<size_t>(r) * dim + p] = c * vrp - s * vrq;
          out.vectors[static_cast<size_t>(r) * dim + q] = s * vrp + c * vrq;
        }
      }
    }
  }

  out.values.resize(dim);
  for (int i = 0; i < dim; ++i) out.values[i] = w[i * dim + i];

  // Sort ascending, permuting eigenvector columns along.
  std::vector<int> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return out.values[x] < out.values[y]; });
  SymEig sorted;
  sorted.dim = dim;
  sorted.values.resize(dim);
  sorted.vectors.assign(static_cast<size_t>(dim) * dim, 0.0);
  for (int j = 0; j < dim; ++j) {
    sorted.values[j] = out.values[order[j]];
    for (int r = 0; r < dim; ++r)
      sorted.vectors[static_cast<size_t>(r) * dim + j] = out.vectors[static_cast<size_t>(r) * dim + order[j]];
  }
  return sorted;
}

std::vector<double> matrix_exp_sym(std::span<const double> a, int dim) {
  SymEig eig = sym_eig(a, dim);
  std::vector<double> out(static_cast<size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int l = 0; l < dim; ++l) s += eig.vec(i, l) * std::exp(eig.values[l]) * eig.vec(j, l);
      out[static_cast<size_t>(i) * dim + j] = s;
      out[static_cast<size_t>(j) * dim + i] = s;
    }
  }
  return out;
}

EnergyMatrices::EnergyMatrices(int k_, int m_, std::vector<double> blocks_)
    : k(k_), m(m_), blocks(std::move(blocks_)) {
  if (static_cast<int>(blocks.size()) != k * k * m)
    throw DimensionError("EnergyMatrices: block storage size mismatch");
  refresh_eigs();
}

EnergyMatrices EnergyMatrices::identity(int k, int m) {
  std::vector<double> b(static_cast<size_t>(k) * k * m, 0.0);
  for (int e = 0; e < m; ++e)
    for (int i = 0; i < k; ++i) b[static_cast<size_t>(e) * k * k + static_cast<size_t>(i) * k + i] = 1.0;
  return EnergyMatrices(k, m, std::move(b));
}

EnergyMatrices EnergyMatrices::scalar(int k, std::span<const double> edge_weights) {
  const int m = static_cast<int>(edge_weights.size());
  std::vector<double> b(static_cast<size_t>(k) * k * m, 0.0);
  for (int e = 0; e < m; ++e)
    for (int i = 0; i < k; ++i)
      b[static_cast<size_t>(e) * k * k + static_cast<size_t>(i) * k + i] = edge_weights[e];
  return EnergyMatrices(k, m, std::move(b));
}

void EnergyMatrices::refresh_eigs() {
  lambda_min.resize(m);
  lambda_max.resize(m);
  for (int e = 0; e < m; ++e) {
    SymEig eig = sym_eig(block(e), k);
    lambda_min[e] = eig.values.front();
    lambda_max[e] = eig.values.back();
    if (!(lambda_min[e] > 0.0))
      throw NumericError("EnergyMatrices: block " + std::to_string(e) + " is not positive definite");
  }
}

double energy(const EnergyMatrices& p, const MultiFlow& f) {
  if (p.k != f.k || p.m != f.m) throw DimensionError("energy: dimension mismatch");
  double total = 0.0;
  for (int e = 0; e < p.m; ++e) total += energy_edge(p, e, f);
  return total;
}

double energy_edge(const EnergyMatrices& p, int e, const MultiFlow& f) {
  if (p.k != f.k || p.m != f.m) throw DimensionError("energy_edge: dimension mismatch");
  const auto fe = f.block(e);
  const auto pe = p.block(e);
  double total = 0.0;
  for (int i = 0; i < p.k; ++i) {
    double row = 0.0;
    for (int j = 0; j < p.k; ++j) row += pe[static_cast<size_t>(i) * p.k + j] * fe[j];
    total += fe[i] * row;
  }
  return total;
}

double saturation(const EnergyMatrices& p, int e, const MultiFlow& f) {
  return std::sqrt(std::max(0.0, energy_edge(p, e, f)));
}

double congestion_l1(const MultiFlow& f, int e, double u) {
  return norm1(f.block(e)) / u;
}

double block_condition_bound(const EnergyMatrices& p) {
  double kappa = 1.0;
  for (int e = 0; e < p.m; ++e) kappa = std::max(kappa, p.lambda_max[e] / p.lambda_min[e]);
  return kappa;
}

}  // namespace mcf
