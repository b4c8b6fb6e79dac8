#include "polymerlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "polymerlab/errors.hpp"
#include "polymerlab/walk.hpp"

namespace polymerlab::oracle {

namespace {

std::size_t cells_for(int d, int radius, int padding) {
  std::size_t n = 1;
  for (int j = 0; j < d; ++j) n *= static_cast<std::size_t>(2 * (radius + padding) + 1);
  return n;
}

// Clip radius of the difference walk, whose per-coordinate variance is 2k/d.
int difference_radius(int d, int k, double sigmas) {
  if (k <= 0) return 0;
  const double gaussian = std::ceil(sigmas * std::sqrt(2.0 * k / d)) + 2.0;
  return gaussian >= 2 * k ? 2 * k : static_cast<int>(gaussian);
}

OverlapTrajectory run_dp(Dimension dim, double lambda2, int n, const OverlapOptions& options) {
  if (n < 0) throw ParameterError("overlap DP needs n >= 0");
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw ParameterError("lambda2 must be finite and >= 0");
  const int d = dim.value();
  const int capacity = difference_radius(d, n, options.sigmas);
  if (cells_for(d, capacity, 2) > options.max_cells) {
    throw ResourceError("overlap DP box budget exceeded for n=" + std::to_string(n));
  }
  const auto kernel = walk::WalkKernel::difference(dim);
  Slab a(d, capacity, 2);
  Slab b(d, capacity, 2);
  Slab* cur = &a;
  Slab* next = &b;
  std::vector<std::ptrdiff_t> offsets;
  std::vector<double> weights;
  for (const auto& e : kernel.entries()) {
    std::ptrdiff_t off = 0;
    for (int j = 0; j < d; ++j) off += e.offset[j] * a.stride(j);
    offsets.push_back(off);
    weights.push_back(e.weight);
  }
  const std::size_t origin = a.index(Site{});
  const double boost = std::exp(lambda2);

  OverlapTrajectory out;
  out.d = d;
  out.lambda2 = lambda2;
  out.second_moment.reserve(static_cast<std::size_t>(n) + 1);
  out.pinned.reserve(static_cast<std::size_t>(n));
  (*cur)(Site{}) = 1.0;
  double total = 1.0;
  out.second_moment.push_back(total);
  int radius = 0;
  for (int k = 0; k < n; ++k) {
    const int r_next = difference_radius(d, k + 1, options.sigmas);
    const double* in = cur->values().data();
    double* o = next->values().data();
    double sum = 0.0;
    // Z_k has even coordinate sum at every time.
    next->for_each_row(r_next, 0, [&](const Site&, std::size_t idx, int count) {
      double row = 0.0;
      for (int c = 0; c < count; ++c) {
        const std::size_t i = idx + 2 * static_cast<std::size_t>(c);
        double s = 0.0;
        for (std::size_t e = 0; e < offsets.size(); ++e) s += weights[e] * in[i + offsets[e]];
        o[i] = s;
        row += s;
      }
      sum += row;
    });
    out.clipped_fraction += std::max(0.0, total - sum) / total;
    out.pinned.push_back(o[origin]);
    sum += (boost - 1.0) * o[origin];
    o[origin] *= boost;
    total = sum;
    out.second_moment.push_back(total);
    radius = r_next;
    std::swap(cur, next);
  }
  (void)radius;
  return out;
}

struct CacheKey {
  int d;
  double lambda2;
  auto operator<=>(const CacheKey&) const = default;
};

}  // namespace

OverlapTrajectory overlap_dp(Dimension d, double lambda2, int n, OverlapOptions options) {
  static std::mutex mutex;
  static std::map<CacheKey, OverlapTrajectory> cache;
  const bool default_options = options.sigmas == OverlapOptions{}.sigmas;
  if (default_options) {
    std::lock_guard lock(mutex);
    auto it = cache.find({d.value(), lambda2});
    if (it != cache.end() && static_cast<int>(it->second.pinned.size()) >= n) {
      OverlapTrajectory t = it->second;
      t.second_moment.resize(static_cast<std::size_t>(n) + 1);
      t.pinned.resize(static_cast<std::size_t>(n));
      return t;
    }
  }
  OverlapTrajectory t = run_dp(d, lambda2, n, options);
  if (default_options) {
    std::lock_guard lock(mutex);
    auto& slot = cache[{d.value(), lambda2}];
    if (slot.pinned.size() < t.pinned.size()) slot = t;
  }
  return t;
}

double exact_second_moment(Dimension d, double lambda2, int n) {
  return overlap_dp(d, lambda2, n).second_moment.back();
}

double exact_increment_variance(Dimension d, double lambda2, int k) {
  if (k < 0) throw ParameterError("exact_increment_variance needs k >= 0");
  const auto t = overlap_dp(d, lambda2, k + 1);
  return std::expm1(lambda2) * t.pinned[static_cast<std::size_t>(k)];
}

BridgeValue bridge_expectation(Dimension d, double lambda2, int n) {
  if (n < 0) throw ParameterError("bridge_expectation needs n >= 0");
  const auto t = overlap_dp(d, lambda2, n + 1);
  const auto& u = walk::cached_return_probabilities(d, n + 1);
  BridgeValue b;
  b.n = n;
  b.value = t.pinned[static_cast<std::size_t>(n)] / u[n + 1];
  b.in_L2_region = lambda2 < -std::log(walk::golden_constants(d).pi_d);
  return b;
}

double truncated_bracket_expectation(Dimension d, double lambda2, int n, int K) {
  if (n < 1) throw ParameterError("truncated_bracket_expectation needs n >= 1");
  if (K < 2) throw ParameterError("truncated_bracket_expectation needs K >= 2");
  const auto t = overlap_dp(d, lambda2, K * n);
  const double kappa2 = std::expm1(lambda2);
  double s = 0.0;
  for (int k = K * n - 1; k >= n; --k) s += t.pinned[static_cast<std::size_t>(k)];
  return std::pow(n, (d.value() - 2) / 2.0) * kappa2 * s;
}

double closed_bracket_expectation(Dimension d, double lambda2, int n, int horizon) {
  if (n < 1 || horizon <= n) throw ParameterError("closed_bracket_expectation needs 1 <= n < horizon");
  const auto t = overlap_dp(d, lambda2, horizon);
  const double kappa2 = std::expm1(lambda2);
  double s = 0.0;
  for (int k = horizon - 1; k >= n; --k) s += t.pinned[static_cast<std::size_t>(k)];
  // Σ_{k≥horizon} u_{k+1} = Σ_{j>horizon} u_j
  const int K = std::max(1024, 4 * horizon);
  const auto& full = walk::cached_return_probabilities(d, K);
  walk::ReturnProbabilityTable table{full.d, K, {full.p.begin(), full.p.begin() + K + 1}};
  double tail_u = walk::return_tail(table).value;
  for (int j = K; j > horizon; --j) tail_u += table[j];
  const double bridge = t.pinned.back() / table[horizon];
  return std::pow(n, (d.value() - 2) / 2.0) * kappa2 * (s + bridge * tail_u);
}

Adjudication adjudicate_second_moment(Dimension d, double lambda2, int n) {
  if (n < 4 || n % 4 != 0) throw ParameterError("adjudication needs n divisible by 4");
  const double pi = walk::golden_constants(d).pi_d;
  const double e = std::exp(lambda2);
  if (!(pi * e < 1.0)) throw DomainError("E[W_inf^2] is infinite outside the L2 region");
  const auto t = overlap_dp(d, lambda2, n);
  Adjudication a;
  a.n = n;
  a.exact = t.second_moment[static_cast<std::size_t>(n)];
  a.exact_quarter = t.second_moment[static_cast<std::size_t>(n / 4)];
  const double r = std::pow(2.0, d.value() - 2);
  a.extrapolated = (r * a.exact - a.exact_quarter) / (r - 1.0);
  a.geometric = (1.0 - pi) / (1.0 - pi * e);
  a.with_exp_factor = a.geometric * e;
  const double ga = std::abs(a.extrapolated - a.with_exp_factor);
  const double gb = std::abs(a.extrapolated - a.geometric);
  a.closest = gb <= ga ? env::MomentVariant::geometric : env::MomentVariant::with_exp_factor;
  const double chosen = gb <= ga ? a.geometric : a.with_exp_factor;
  a.gap_exact = std::abs(a.exact - chosen);
  a.gap_extrapolated = std::min(ga, gb);
  a.gap_other = std::max(ga, gb);
  return a;
}

}  // namespace polymerlab::oracle
