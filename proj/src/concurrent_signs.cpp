#include "mcf/concurrent_signs.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "mcf/errors.hpp"
#include "mcf/parallel.hpp"

namespace mcf {

std::vector<int> opt_sign(std::span<const double> f_block) {
  std::vector<int> s(f_block.size());
  for (size_t i = 0; i < f_block.size(); ++i) s[i] = f_block[i] < 0.0 ? -1 : 1;
  return s;
}

std::vector<double> round_flow(std::span<const double> f_block, double u, double eps, int k) {
  const double grid = eps / (3.0 * k) * u;
  std::vector<double> out(f_block.size());
  for (size_t i = 0; i < f_block.size(); ++i) {
    const double steps = std::floor(std::abs(f_block[i]) / grid);
    out[i] = (f_block[i] < 0.0 ? -1.0 : 1.0) * steps * grid;
  }
  return out;
}

namespace {

std::mutex fftw_plan_mutex;  // FFTW planning is not thread-safe

// Exact product of two nonnegative-integer polynomials.
std::vector<std::uint64_t> convolve_direct(const std::vector<std::uint64_t>& a,
                                           const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> out(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

std::vector<std::uint64_t> convolve_fft(const std::vector<std::uint64_t>& a,
                                        const std::vector<std::uint64_t>& b) {
  const size_t out_len = a.size() + b.size() - 1;
  size_t L = 1;
  while (L < out_len) L <<= 1;
  std::vector<double> fa(L, 0.0), fb(L, 0.0);
  std::copy(a.begin(), a.end(), fa.begin());
  std::copy(b.begin(), b.end(), fb.begin());

  const size_t cn = L / 2 + 1;
  fftw_complex* ca = fftw_alloc_complex(cn);
  fftw_complex* cb = fftw_alloc_complex(cn);
  fftw_plan pa, pb, pinv;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    pa = fftw_plan_dft_r2c_1d(static_cast<int>(L), fa.data(), ca, FFTW_ESTIMATE);
    pb = fftw_plan_dft_r2c_1d(static_cast<int>(L), fb.data(), cb, FFTW_ESTIMATE);
  }
  fftw_execute(pa);
  fftw_execute(pb);
  for (size_t i = 0; i < cn; ++i) {
    const double re = ca[i][0] * cb[i][0] - ca[i][1] * cb[i][1];
    const double im = ca[i][0] * cb[i][1] + ca[i][1] * cb[i][0];
    ca[i][0] = re;
    ca[i][1] = im;
  }
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    pinv = fftw_plan_dft_c2r_1d(static_cast<int>(L), ca, fa.data(), FFTW_ESTIMATE);
  }
  fftw_execute(pinv);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    fftw_destroy_plan(pinv);
  }
  fftw_free(ca);
  fftw_free(cb);

  std::vector<std::uint64_t> out(out_len);
  for (size_t i = 0; i < out_len; ++i)
    out[i] = static_cast<std::uint64_t>(std::llround(fa[i] / static_cast<double>(L)));
  return out;
}

std::vector<std::uint64_t> convolve_counts(const std::vector<std::uint64_t>& a, int ka,
                                           const std::vector<std::uint64_t>& b, int kb) {
  if (a.size() == 1) {
    std::vector<std::uint64_t> out(b);
    for (auto& v : out) v *= a[0];
    return out;
  }
  if (b.size() == 1) {
    std::vector<std::uint64_t> out(a);
    for (auto& v : out) v *= b[0];
    return out;
  }
  // Counts are bounded by 2^(items merged); keep the FFT path well inside
  // double's exact-integer range, fall back to exact direct convolution.
  const bool fft_safe = ka + kb <= 44 && a.size() + b.size() <= (1u << 24);
  if (!fft_safe || a.size() + b.size() < 64) return convolve_direct(a, b);
  std::vector<std::uint64_t> out = convolve_fft(a, b);
  // Counting identity guard: total subsets must multiply out exactly.
  const std::uint64_t expect = std::accumulate(a.begin(), a.end(), std::uint64_t{0}) *
                               std::accumulate(b.begin(), b.end(), std::uint64_t{0});
  const std::uint64_t got = std::accumulate(out.begin(), out.end(), std::uint64_t{0});
  if (got != expect) return convolve_direct(a, b);
  return out;
}

// Divide and conquer over the sorted value list; both halves carry about
// half the total, so each convolution works on short polynomials.
std::vector<std::uint64_t> count_poly(std::span<const std::int64_t> sorted, int* items) {
  if (sorted.empty()) {
    *items = 0;
    return {1};
  }
  if (sorted.size() == 1) {
    *items = 1;
    std::vector<std::uint64_t> out(static_cast<size_t>(sorted[0]) + 1, 0);
    out[0] = 1;
    out[static_cast<size_t>(sorted[0])] = 1;
    return out;
  }
  std::int64_t total = 0;
  for (auto v : sorted) total += v;
  size_t split = 1;
  std::int64_t prefix = sorted[0];
  while (split < sorted.size() - 1 && prefix + sorted[split] <= total / 2) {
    prefix += sorted[split];
    ++split;
  }
  int left_items = 0, right_items = 0;
  std::vector<std::uint64_t> left = count_poly(sorted.subspan(0, split), &left_items);
  std::vector<std::uint64_t> right = count_poly(sorted.subspan(split), &right_items);
  *items = left_items + right_items;
  return convolve_counts(left, left_items, right, right_items);
}

}  // namespace

CountTable convolve_all(std::span<const std::int64_t> a, long budget) {
  if (a.size() > 60)
    throw BudgetError("convolve_all: more than 60 values (64-bit counts would overflow)");
  std::int64_t total = 0;
  for (auto v : a) {
    if (v < 1) throw NumericError("convolve_all: values must be positive integers");
    total += v;
  }
  if (total > budget) throw BudgetError("convolve_all: table size " + std::to_string(total) +
                                        " exceeds budget " + std::to_string(budget));
  std::vector<std::int64_t> sorted(a.begin(), a.end());
  std::sort(sorted.begin(), sorted.end());
  int items = 0;
  CountTable table;
  table.counts = count_poly(sorted, &items);
  return table;
}

double sign_weight_implied(std::span<const double> f_block, double u, double eps, double rho,
                           std::span<const int> s) {
  const int k = static_cast<int>(f_block.size());
  const double grid = eps / (3.0 * k) * u;
  const std::vector<int> star = opt_sign(f_block);
  double anchor = 0.0;
  std::int64_t gap = 0;
  for (int i = 0; i < k; ++i) {
    anchor += star[i] * f_block[i];
    if (s[i] != star[i]) gap += 2 * static_cast<std::int64_t>(std::floor(std::abs(f_block[i]) / grid));
  }
  return std::exp(eps / rho * anchor / u - eps / rho * (eps / (3.0 * k)) * static_cast<double>(gap));
}

std::vector<double> energy_matrix_signs(const SignEnergyInput& in) {
  const int k = static_cast<int>(in.f_block.size());
  const double u = in.u, eps = in.eps, rho = in.rho;
  if (!(u > 0.0) || !(eps > 0.0) || !(rho > 0.0))
    throw NumericError("energy_matrix_signs: parameters must be positive");
  if (norm1(in.f_block) > in.rho_prime * u * (1.0 + 1e-9))
    throw NumericError("energy_matrix_signs: ||f||_1 exceeds rho' * u");

  // Integer grid: a_l = 2 * floor(|f_l| * 3k / (eps u)); a gap of j grid
  // half-steps costs the weight a factor beta^j.
  const double grid = eps / (3.0 * k) * u;
  std::vector<std::int64_t> a(k);
  for (int i = 0; i < k; ++i) a[i] = 2 * static_cast<std::int64_t>(std::floor(std::abs(in.f_block[i]) / grid));
  const double beta = std::exp(-(eps / rho) * (eps / (3.0 * k)));
  const std::vector<int> star = opt_sign(in.f_block);

  auto poly_value = [&](const CountTable& t) {
    double acc = 0.0;
    double bpow = 1.0;
    for (size_t j = 0; j < t.counts.size(); ++j) {
      if (t.counts[j]) acc += static_cast<double>(t.counts[j]) * bpow;
      bpow *= beta;
    }
    return acc;
  };

  // Rounded-to-zero coordinates contribute a factor 2 to every count.
  auto gather = [&](int skip_i, int skip_j) {
    std::vector<std::int64_t> vals;
    int zeros = 0;
    for (int l = 0; l < k; ++l) {
      if (l == skip_i || l == skip_j) continue;
      if (a[l] > 0)
        vals.push_back(a[l]);
      else
        ++zeros;
    }
    CountTable t = convolve_all(vals, in.convolve_budget);
    return std::ldexp(poly_value(t), zeros);
  };

  const double denom = gather(-1, -1);
  std::vector<double> p(static_cast<size_t>(k) * k, 0.0);
  const double inv_u2 = 1.0 / (u * u);
  for (int i = 0; i < k; ++i) p[static_cast<size_t>(i) * k + i] = (1.0 + eps) * inv_u2;

  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double rest = gather(i, j);
      const double bi = std::pow(beta, static_cast<double>(a[i]));
      const double bj = std::pow(beta, static_cast<double>(a[j]));
      double numer = 0.0;
      // Four settings of (s_i, s_j): each disagreement with the optimal sign
      // multiplies the weight by beta^{a} and flips the product's sign.
      for (int di = 0; di < 2; ++di) {
        for (int dj = 0; dj < 2; ++dj) {
          const double w = (di ? bi : 1.0) * (dj ? bj : 1.0);
          const double sgn = (di ? -1.0 : 1.0) * (dj ? -1.0 : 1.0);
          numer += sgn * w;
        }
      }
      numer *= static_cast<double>(star[i] * star[j]) * rest;
      const double value = numer / denom * inv_u2;
      p[static_cast<size_t>(i) * k + j] = value;
      p[static_cast<size_t>(j) * k + i] = value;
    }
  }
  return p;
}

SignsDefaults signs_paper_defaults(int k, double eps) {
  SignsDefaults d;
  d.rho = static_cast<double>(k);
  d.iterations = d.rho * static_cast<double>(k) / (eps * eps);
  return d;
}

ConcurrentOutcome max_concurrent_flow_signs(const Instance& inst, double eps,
                                            const SolverOptions& opts, TraceSink* sink) {
  if (!(eps > 0.0 && eps <= 0.5)) throw NumericError("max_concurrent_flow_signs: eps out of range");
  const int k = inst.k(), m = inst.m();
  const SignsDefaults paper = signs_paper_defaults(k, eps);
  const double rho = opts.rho_outer > 0 ? opts.rho_outer : paper.rho;
  long iterations;
  if (opts.n_outer > 0)
    iterations = opts.n_outer;
  else if (opts.paper_faithful)
    iterations = std::max<long>(1, static_cast<long>(std::ceil(paper.iterations)));
  else
    iterations = std::max<long>(16, static_cast<long>(std::ceil(2.0 / eps)));

  const DemandVector d = inst.demand_vector();
  MultiFlow sum(k, m);
  ConcurrentOutcome out;
  const double cond_limit = 2.0 * k / eps + 1e-9;

  for (long t = 1; t <= iterations; ++t) {
    double rho_prime = 1.0;
    for (int e = 0; e < m; ++e)
      rho_prime = std::max(rho_prime, norm1(sum.block(e)) / inst.graph.edges[e].capacity);

    std::vector<double> blocks(static_cast<size_t>(m) * k * k);
    parallel_for(m, opts.threads, [&](long e) {
      SignEnergyInput si;
      si.f_block.assign(sum.block(e).begin(), sum.block(e).end());
      si.u = inst.graph.edges[e].capacity;
      si.rho = rho;
      si.rho_prime = rho_prime;
      si.eps = eps;
      si.convolve_budget = opts.convolve_budget;
      std::vector<double> pe = energy_matrix_signs(si);
      std::copy(pe.begin(), pe.end(), blocks.begin() + static_cast<size_t>(e) * k * k);
    });
    EnergyMatrices p(k, m, std::move(blocks));
    const double cond = block_condition_bound(p);
    if (sink) sink->max_block_condition = std::max(sink->max_block_condition, cond);
    if (cond > cond_limit)
      throw NumericError("max_concurrent_flow_signs: energy-matrix condition bound violated");

    CapacitatedOutcome inner = quadratically_capacitated_flow(inst.graph, p, d, eps, opts, sink);
    out.report.merge(inner.report);
    out.iterations = t;
    if (inner.status == SolveStatus::fail) {
      out.status = SolveStatus::fail;
      return out;
    }

    double max_rel = 0.0;
    bool width_ok = true;
    for (int e = 0; e < m; ++e) {
      const double rel = norm1(inner.flow.block(e)) / inst.graph.edges[e].capacity;
      max_rel = std::max(max_rel, rel);
      if (rel > rho * (1.0 + 1e-9)) width_ok = false;
    }
    if (sink) sink->outer.push_back({t, max_rel, width_ok});
    for (size_t i = 0; i < sum.v.size(); ++i) sum.v[i] += inner.flow.v[i];
  }

  out.status = SolveStatus::flow;
  out.flow = MultiFlow(k, m);
  for (size_t i = 0; i < sum.v.size(); ++i) out.flow.v[i] = sum.v[i] / static_cast<double>(iterations);
  for (int e = 0; e < m; ++e)
    out.max_rel_congestion =
        std::max(out.max_rel_congestion, norm1(out.flow.block(e)) / inst.graph.edges[e].capacity);
  return out;
}

}  // namespace mcf
