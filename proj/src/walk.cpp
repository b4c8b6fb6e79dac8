#include "polymerlab/walk.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "polymerlab/errors.hpp"

namespace polymerlab::walk {

namespace {

constexpr int kMaxTableK = 1 << 22;

// Σ_{k>K} k^{-s} by Euler-Maclaurin, accurate to O(K^{-s-7}).
double power_tail(double s, int K) {
  const double x = K;
  const double f = std::pow(x, -s);
  const double integral = x * f / (s - 1.0);
  const double d1 = -s * f / x;
  const double d3 = -s * (s + 1) * (s + 2) * f / (x * x * x);
  const double d5 = -s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * f / std::pow(x, 5);
  return integral - 0.5 * f - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0;
}

// Σ over even m of Binom(M, m; p) * left[m/2] * right[(M-m)/2], M even.
// Binomial weights are generated by ratio recurrence outward from the mode and
// normalized by their own sum, which avoids lgamma round-off at large M.
double binomial_split(int M, double p, const std::vector<double>& left,
                      const std::vector<double>& right) {
  const double q = 1.0 - p;
  const int mode = std::min(M, static_cast<int>(std::floor((M + 1) * p)));
  const double up = p / q;
  const double down = q / p;
  constexpr double kCut = 1e-32;

  double norm = 0.0;
  double acc = 0.0;
  double w = 1.0;
  for (int m = mode; m <= M; ++m) {
    norm += w;
    if ((m & 1) == 0) acc += w * left[m / 2] * right[(M - m) / 2];
    if (w < kCut) break;
    w *= static_cast<double>(M - m) / (m + 1) * up;
  }
  w = 1.0;
  for (int m = mode; m > 0;) {
    w *= static_cast<double>(m) / (M - m + 1) * down;
    --m;
    norm += w;
    if ((m & 1) == 0) acc += w * left[m / 2] * right[(M - m) / 2];
    if (w < kCut) break;
  }
  return acc / norm;
}

}  // namespace

WalkKernel WalkKernel::simple(Dimension d) {
  std::vector<KernelEntry> e;
  const double w = 1.0 / (2.0 * d.value());
  for (int i = 0; i < d.value(); ++i) {
    for (int s : {-1, 1}) {
      Site x{};
      x[i] = s;
      e.push_back({x, w});
    }
  }
  return WalkKernel(d, std::move(e));
}

WalkKernel WalkKernel::difference(Dimension d) {
  const int dd = d.value();
  const double unit = 1.0 / (4.0 * dd * dd);
  std::vector<KernelEntry> e;
  e.push_back({Site{}, 1.0 / (2.0 * dd)});
  for (int i = 0; i < dd; ++i) {
    for (int s : {-2, 2}) {
      Site x{};
      x[i] = s;
      e.push_back({x, unit});
    }
  }
  for (int i = 0; i < dd; ++i) {
    for (int j = i + 1; j < dd; ++j) {
      for (int si : {-1, 1}) {
        for (int sj : {-1, 1}) {
          Site x{};
          x[i] = si;
          x[j] = sj;
          e.push_back({x, 2.0 * unit});
        }
      }
    }
  }
  return WalkKernel(d, std::move(e));
}

double WalkKernel::weight(const Site& offset) const {
  for (const auto& e : entries_) {
    if (e.offset == offset) return e.weight;
  }
  return 0.0;
}

double WalkKernel::total_mass() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.weight;
  return s;
}

int WalkKernel::range() const {
  int r = 0;
  for (const auto& e : entries_) r = std::max(r, l1_norm(e.offset, d_.value()));
  return r;
}

Slab convolution_power(const WalkKernel& kernel, int k) {
  if (k < 0) throw ParameterError("negative convolution power");
  const int d = kernel.dimension().value();
  const int radius = k * kernel.range();
  Slab cur(d, radius);
  Slab next(d, radius);
  cur(Site{}) = 1.0;
  for (int step = 1; step <= k; ++step) {
    next.clear();
    const int r_in = (step - 1) * kernel.range();
    cur.for_each_site(r_in, [&](const Site& x, std::size_t idx) {
      const double v = cur.values()[idx];
      if (v == 0.0) return;
      for (const auto& e : kernel.entries()) {
        Site y = x;
        for (int j = 0; j < d; ++j) y[j] += e.offset[j];
        next(y) += v * e.weight;
      }
    });
    std::swap(cur, next);
  }
  return cur;
}

ReturnProbabilityTable return_probabilities(Dimension dim, int k_max) {
  if (k_max < 1) throw ParameterError("k_max must be at least 1");
  if (k_max > kMaxTableK) {
    throw ResourceError("return-probability table k_max " + std::to_string(k_max) +
                        " exceeds budget " + std::to_string(kMaxTableK));
  }
  const auto n = static_cast<std::size_t>(k_max) + 1;
  // One-dimensional return law C(2h,h)/4^h, indexed by h.
  std::vector<double> line(n);
  line[0] = 1.0;
  for (std::size_t h = 1; h < n; ++h) {
    line[h] = line[h - 1] * static_cast<double>(2 * h - 1) / static_cast<double>(2 * h);
  }
  // Planar walk: P(S_{2h}=0) = (C(2h,h)/4^h)^2.
  std::vector<double> cur(n);
  for (std::size_t h = 0; h < n; ++h) cur[h] = line[h] * line[h];

  for (int j = 3; j <= dim.value(); ++j) {
    std::vector<double> next(n);
    const double p = 1.0 / j;
    for (std::size_t h = 0; h < n; ++h) {
      next[h] = binomial_split(static_cast<int>(2 * h), p, line, cur);
    }
    cur = std::move(next);
  }
  return ReturnProbabilityTable{dim.value(), k_max, std::move(cur)};
}

const ReturnProbabilityTable& cached_return_probabilities(Dimension d, int k_max) {
  static std::mutex mutex;
  static std::vector<std::unique_ptr<ReturnProbabilityTable>> tables;
  std::lock_guard lock(mutex);
  for (const auto& t : tables) {
    if (t->d == d.value() && t->k_max >= k_max) return *t;
  }
  int size = 256;
  while (size < k_max) size *= 2;
  tables.push_back(std::make_unique<ReturnProbabilityTable>(return_probabilities(d, size)));
  return *tables.back();
}

double lclt_return_constant(Dimension d) {
  const double dd = d.value();
  return 2.0 * std::pow(dd / (4.0 * std::numbers::pi), dd / 2.0);
}

double zeta_closed_form(Dimension d) {
  const double dd = d.value();
  return 4.0 / (dd - 2.0) * std::pow(dd / (4.0 * std::numbers::pi), dd / 2.0);
}

TailClosure return_tail(const ReturnProbabilityTable& table) {
  const int K = table.k_max;
  if (K < 64) throw ParameterError("tail closure needs a table with k_max >= 64");
  const Dimension dim(table.d);
  const double A = lclt_return_constant(dim);
  const double s = table.d / 2.0;
  auto rel = [&](int k) { return table[k] / (A * std::pow(k, -s)) - 1.0; };
  const int H = K / 2;
  const double a = 1.0 / K;
  const double b = 1.0 / H;
  const double rK = rel(K);
  const double rH = rel(H);
  const double det = a * b * (b - a);
  const double c1 = (rK * b * b - rH * a * a) / det;
  const double c2 = (a * rH - b * rK) / det;
  const double c1_only = rK * K;

  const double t0 = power_tail(s, K);
  const double t1 = power_tail(s + 1, K);
  const double t2 = power_tail(s + 2, K);
  const double two_term = A * (t0 + c1 * t1 + c2 * t2);
  const double one_term = A * (t0 + c1_only * t1);
  return {two_term, std::abs(two_term - one_term)};
}

PiEstimate pi_d(Dimension d, double tol, int max_kmax) {
  if (!(tol > 0.0) || tol > 1e-3) throw ParameterError("pi_d tolerance must lie in (0, 1e-3]");
  double best = 0.0;
  for (int K = 1024; K <= max_kmax; K *= 2) {
    const auto& table = cached_return_probabilities(d, K);
    double green = 0.0;
    for (int k = K; k >= 0; --k) green += table[k];
    const auto tail = return_tail(ReturnProbabilityTable{table.d, K, {table.p.begin(), table.p.begin() + K + 1}});
    green += tail.value;
    const double green_err = tail.error + 1e-13 * green;
    const double pi = 1.0 - 1.0 / green;
    const double err = green_err / (green * green);
    best = err;
    if (err <= tol) return {pi, err, K};
  }
  throw PrecisionError("pi_d: tolerance not reachable with k_max <= " + std::to_string(max_kmax) +
                           "; achievable bound " + std::to_string(best),
                       best);
}

ZetaEstimate zeta_d(Dimension d, int n) {
  if (n < 1) throw ParameterError("zeta_d requires n >= 1");
  int K = 1024;
  while (K < 4 * n) K *= 2;
  const auto& full = cached_return_probabilities(d, K);
  ReturnProbabilityTable table{full.d, K, {full.p.begin(), full.p.begin() + K + 1}};
  double sum = 0.0;
  for (int k = K; k >= n + 1; --k) sum += table[k];
  sum += return_tail(table).value;
  return {std::pow(n, (d.value() - 2) / 2.0) * sum, n, K};
}

double lclt_density(Dimension d, int k, const Site& x) {
  if (k < 1) throw DomainError("lclt_density requires k >= 1");
  const int dd = d.value();
  if (((l1_norm(x, dd) - k) & 1) != 0) {
    throw DomainError("site " + to_string(x, dd) + " has the wrong parity for time " +
                      std::to_string(k));
  }
  const double kk = k;
  return 2.0 * std::pow(dd / (2.0 * std::numbers::pi * kk), dd / 2.0) *
         std::exp(-dd * static_cast<double>(squared_norm(x, dd)) / (2.0 * kk));
}

int clip_radius(int d, int k, double sigmas) {
  if (k <= 0) return 0;
  const double gaussian = std::ceil(sigmas * std::sqrt(static_cast<double>(k) / d)) + 2.0;
  return gaussian >= k ? k : static_cast<int>(gaussian);
}

SrwPropagator::SrwPropagator(Dimension d, int k_final, double sigmas)
    : d_(d),
      sigmas_(sigmas),
      a_(d.value(), clip_radius(d.value(), k_final, sigmas)),
      b_(d.value(), clip_radius(d.value(), k_final, sigmas)),
      cur_(&a_),
      next_(&b_) {
  a_(Site{}) = 1.0;
}

void SrwPropagator::step() {
  const int d = d_.value();
  const int r_next = clip_radius(d, k_ + 1, sigmas_);
  if (r_next > cur_->capacity()) {
    throw ResourceError("SrwPropagator: capacity exhausted at k=" + std::to_string(k_));
  }
  const double w = 1.0 / (2.0 * d);
  const double* in = cur_->values().data();
  double* out = next_->values().data();
  std::array<std::ptrdiff_t, kMaxDim> strides{};
  for (int j = 0; j < d; ++j) strides[j] = cur_->stride(j);

  double total_in = 0.0;
  cur_->for_each_row(radius_, k_ & 1, [&](const Site&, std::size_t idx, int count) {
    for (int c = 0; c < count; ++c) total_in += in[idx + 2 * c];
  });
  double total_out = 0.0;
  next_->for_each_row(r_next, (k_ + 1) & 1, [&](const Site&, std::size_t idx, int count) {
    for (int c = 0; c < count; ++c) {
      const std::size_t i = idx + 2 * static_cast<std::size_t>(c);
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += in[i + strides[j]] + in[i - strides[j]];
      out[i] = s * w;
      total_out += out[i];
    }
  });
  clipped_ += std::max(0.0, total_in - total_out);
  std::swap(cur_, next_);
  radius_ = r_next;
  ++k_;
}

}  // namespace polymerlab::walk

namespace polymerlab::walk {

const GoldenConstants& golden_constants(Dimension d) {
  static std::once_flag flags[kMaxDim + 1];
  static GoldenConstants values[kMaxDim + 1];
  const int i = d.value();
  std::call_once(flags[i], [&] {
    const auto pi = pi_d(d, 1e-10);
    values[i] = GoldenConstants{i, pi.value, pi.error, zeta_closed_form(d), pi.table_kmax};
  });
  return values[i];
}

}  // namespace polymerlab::walk
