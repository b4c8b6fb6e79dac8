#include "polymerlab/polymer.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>

#include "polymerlab/errors.hpp"
#include "polymerlab/walk.hpp"

namespace polymerlab::polymer {

namespace {

std::size_t cells_for(int d, int radius) {
  std::size_t n = 1;
  for (int j = 0; j < d; ++j) n *= static_cast<std::size_t>(2 * radius + 3);
  return n;
}

int capacity_for(int d, int k_final, const BoxPolicy& policy) {
  const int r = walk::clip_radius(d, k_final, policy.sigmas);
  if (cells_for(d, r) > policy.max_cells) {
    // Report the last time whose box still fits.
    int k = 0;
    while (k < k_final && cells_for(d, walk::clip_radius(d, k + 1, policy.sigmas)) <= policy.max_cells) ++k;
    throw ResourceError("polymer box budget of " + std::to_string(policy.max_cells) +
                        " cells exceeded; reachable time k=" + std::to_string(k));
  }
  return r;
}

// Sum of the 2d nearest neighbours of a cell.
inline double neighbour_sum(const double* in, std::size_t i, const std::ptrdiff_t* strides, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) s += in[i + strides[j]] + in[i - strides[j]];
  return s;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ParameterError("truncated slab snapshot");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

PolymerState::PolymerState(env::EnvironmentField field, env::TemperatureProfile profile, int k_final,
                           BoxPolicy policy, std::vector<double> alpha_grid)
    : field_(field),
      profile_(profile),
      policy_(policy),
      alphas_(std::move(alpha_grid)),
      k_final_(k_final),
      a_(field.dimension().value(), capacity_for(field.dimension().value(), k_final, policy)),
      b_(field.dimension().value(), a_.capacity()),
      cur_(&a_),
      next_(&b_) {
  if (k_final < 0) throw ParameterError("k_final must be >= 0");
  if (profile.d != field.dimension().value()) throw ParameterError("profile and field dimensions differ");
  a_(Site{}) = 1.0;
  row_.resize(static_cast<std::size_t>(2 * a_.capacity() + 1));
}

double PolymerState::weight(const Site& x) const {
  return cur_->in_box(x) ? (*cur_)(x) : 0.0;
}

IncrementRecord PolymerState::step() {
  const int d = field_.dimension().value();
  const int last = d - 1;
  const int r_next = walk::clip_radius(d, k_ + 1, policy_.sigmas);
  if (r_next > cur_->capacity()) {
    throw ResourceError("polymer box capacity exhausted; reached k=" + std::to_string(k_));
  }
  const double beta = profile_.beta;
  const double lambda = profile_.lambda;
  const double w = 1.0 / (2.0 * d);
  std::array<std::ptrdiff_t, kMaxDim> strides{};
  for (int j = 0; j < d; ++j) strides[j] = cur_->stride(j);
  const double* in = cur_->values().data();
  double* out = next_->values().data();

  const std::size_t n_alpha = alphas_.size();
  std::vector<double> thresholds(n_alpha);
  for (std::size_t a = 0; a < n_alpha; ++a) thresholds[a] = alphas_[a] * alphas_[a] * k_;
  std::vector<double> window(n_alpha, 0.0);
  std::vector<double> row_window(n_alpha);

  double sum_q = 0.0, sum_q2 = 0.0, sum_qeta = 0.0, sum_out = 0.0;
  std::size_t subnormal = 0;
  next_->for_each_row(r_next, (k_ + 1) & 1, [&](const Site& start, std::size_t idx, int count) {
    field_.fill_row(k_ + 1, start, count, row_.data());
    double rq = 0.0, rq2 = 0.0, rqeta = 0.0, rout = 0.0;
    std::fill(row_window.begin(), row_window.end(), 0.0);
    std::int64_t prefix_sq = 0;
    for (int j = 0; j < last; ++j) prefix_sq += static_cast<std::int64_t>(start[j]) * start[j];
    for (int c = 0; c < count; ++c) {
      const std::size_t i = idx + 2 * static_cast<std::size_t>(c);
      const double q = neighbour_sum(in, i, strides.data(), d) * w;
      const double mult = std::exp(beta * row_[c] - lambda);
      const double wq = q * mult;
      out[i] = wq;
      rq += q;
      rq2 += q * q;
      rqeta += q * (mult - 1.0);
      rout += wq;
      if (wq < DBL_MIN && wq > 0.0) ++subnormal;
      if (n_alpha) {
        const int xl = start[last] + 2 * c;
        const double sq = static_cast<double>(prefix_sq + static_cast<std::int64_t>(xl) * xl);
        for (std::size_t a = 0; a < n_alpha; ++a) {
          if (sq > thresholds[a]) row_window[a] += q * q;
        }
      }
    }
    sum_q += rq;
    sum_q2 += rq2;
    sum_qeta += rqeta;
    sum_out += rout;
    for (std::size_t a = 0; a < n_alpha; ++a) window[a] += row_window[a];
  });

  IncrementRecord rec;
  rec.k = k_;
  rec.D = sum_qeta;
  rec.D_slab = sum_out - W_;
  rec.bracket = profile_.kappa2 * sum_q2;
  rec.window_mass.resize(n_alpha);
  for (std::size_t a = 0; a < n_alpha; ++a) rec.window_mass[a] = profile_.kappa2 * window[a];
  rec.clipped = std::max(0.0, W_ - sum_q);
  if (W_ > 0.0) clipped_fraction_ += rec.clipped / W_;

  W_ = sum_out;
  subnormal_ = subnormal;
  std::swap(cur_, next_);
  radius_ = r_next;
  ++k_;
  return rec;
}

Slab arrival_mass(const PolymerState& state, int radius) {
  const int d = state.field().dimension().value();
  Slab q(d, radius);
  const double w = 1.0 / (2.0 * d);
  q.for_each_row(radius, (state.time() + 1) & 1, [&](const Site& start, std::size_t idx, int count) {
    Site x = start;
    for (int c = 0; c < count; ++c) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) {
        Site y = x;
        y[j] += 1;
        s += state.weight(y);
        y[j] -= 2;
        s += state.weight(y);
      }
      q.values()[idx + 2 * static_cast<std::size_t>(c)] = s * w;
      x[d - 1] += 2;
    }
  });
  return q;
}

IncrementRecord increment_bracket(const PolymerState& state, double alpha) {
  const int d = state.field().dimension().value();
  const int k = state.time();
  const int radius = state.radius() + 1;
  const Slab q = arrival_mass(state, radius);
  const auto& profile = state.profile();
  std::vector<double> omega(static_cast<std::size_t>(2 * radius + 1));
  double sum_q = 0.0, sum_q2 = 0.0, window = 0.0, D = 0.0;
  const double threshold = alpha * alpha * k;
  q.for_each_row(radius, (k + 1) & 1, [&](const Site& start, std::size_t idx, int count) {
    state.field().fill_row(k + 1, start, count, omega.data());
    Site x = start;
    for (int c = 0; c < count; ++c) {
      const double v = q.values()[idx + 2 * static_cast<std::size_t>(c)];
      const double eta = std::expm1(profile.beta * omega[c] - profile.lambda);
      sum_q += v;
      sum_q2 += v * v;
      D += v * eta;
      if (static_cast<double>(squared_norm(x, d)) > threshold) window += v * v;
      x[d - 1] += 2;
    }
  });
  IncrementRecord rec;
  rec.k = k;
  rec.D = D;
  rec.bracket = profile.kappa2 * sum_q2;
  rec.window_mass = {profile.kappa2 * window};
  rec.clipped = std::max(0.0, state.partition() - sum_q);
  return rec;
}

std::vector<double> partition_function(const env::EnvironmentField& field,
                                       const env::TemperatureProfile& profile, int n, BoxPolicy policy) {
  if (n < 0) throw ParameterError("partition_function requires n >= 0");
  PolymerState state(field, profile, n, policy);
  std::vector<double> W{1.0};
  W.reserve(static_cast<std::size_t>(n) + 1);
  while (state.time() < n) {
    state.step();
    W.push_back(state.partition());
  }
  return W;
}

Slab reversed_partition_slab(const env::EnvironmentField& field, const env::TemperatureProfile& profile,
                             int k, int l, int radius) {
  if (l < 0) throw DomainError("reversed partition depth must be >= 0");
  if (l >= k) {
    throw DomainError("reversed partition depth l=" + std::to_string(l) + " must be below k=" +
                      std::to_string(k));
  }
  if (radius < 0) throw ParameterError("negative radius");
  const int d = field.dimension().value();
  const int R = radius + l;
  Slab cur(d, R);
  Slab next(d, R);
  cur.for_each_site(R, [&](const Site&, std::size_t idx) { cur.values()[idx] = 1.0; });
  std::vector<double> omega(static_cast<std::size_t>(2 * R + 1));
  const double w = 1.0 / (2.0 * d);
  std::array<std::ptrdiff_t, kMaxDim> strides{};
  for (int j = 0; j < d; ++j) strides[j] = cur.stride(j);

  for (int j = l; j >= 1; --j) {
    const int row = k + 1 - j;
    const int r_in = R - (l - j);
    for (int parity = 0; parity < 2; ++parity) {
      cur.for_each_row(r_in, parity, [&](const Site& start, std::size_t idx, int count) {
        field.fill_row(row, start, count, omega.data());
        for (int c = 0; c < count; ++c) {
          cur.values()[idx + 2 * static_cast<std::size_t>(c)] *=
              std::exp(profile.beta * omega[c] - profile.lambda);
        }
      });
    }
    next.clear();
    const double* in = cur.values().data();
    for (int parity = 0; parity < 2; ++parity) {
      next.for_each_row(r_in - 1, parity, [&](const Site&, std::size_t idx, int count) {
        for (int c = 0; c < count; ++c) {
          const std::size_t i = idx + 2 * static_cast<std::size_t>(c);
          next.values()[i] = neighbour_sum(in, i, strides.data(), d) * w;
        }
      });
    }
    std::swap(cur, next);
  }
  Slab result(d, radius);
  result.for_each_site(radius, [&](const Site& x, std::size_t idx) { result.values()[idx] = cur(x); });
  return result;
}

ReversedPartition reversed_partition(const env::EnvironmentField& field,
                                     const env::TemperatureProfile& profile, int k, int l,
                                     std::span<const Site> sites) {
  const int d = field.dimension().value();
  int radius = 0;
  for (const auto& x : sites) {
    for (int j = 0; j < d; ++j) radius = std::max(radius, std::abs(x[j]));
  }
  const Slab slab = reversed_partition_slab(field, profile, k, l, radius);
  ReversedPartition out{k + 1, l, {sites.begin(), sites.end()}, {}};
  out.values.reserve(sites.size());
  for (const auto& x : sites) out.values.push_back(slab(x));
  return out;
}

int default_lk(int k, double exponent) {
  return static_cast<int>(std::ceil(std::pow(static_cast<double>(k), exponent) - 1e-9));
}

LLTResidual llt_residual(const PolymerState& state, double W_lk, int lk, double alpha, const Slab* law) {
  const int k = state.time();
  const int d = state.field().dimension().value();
  if (lk < 0 || 2 * lk >= k) {
    throw DomainError("llt_residual needs l_k < k/2 (k=" + std::to_string(k) + ", l_k=" +
                      std::to_string(lk) + ")");
  }
  const double r2 = alpha * alpha * k;
  const int radius = std::min(k + 1, static_cast<int>(std::floor(std::sqrt(r2))));
  const Slab q = arrival_mass(state, radius);
  std::optional<Slab> own;
  if (law == nullptr) {
    own = walk::convolution_power(walk::WalkKernel::simple(Dimension(d)), k + 1);
    law = &*own;
  } else if (law->dim() != d || law->capacity() < radius) {
    throw ParameterError("llt_residual: supplied law does not cover the ball");
  }
  const Slab rev = reversed_partition_slab(state.field(), state.profile(), k, lk, radius);

  LLTResidual out;
  out.k = k;
  out.lk = lk;
  out.alpha = alpha;
  q.for_each_site(radius, [&](const Site& x, std::size_t idx) {
    if (static_cast<double>(squared_norm(x, d)) > r2) return;
    const double p = (*law)(x);
    if (p == 0.0) {
      ++out.skipped;
      return;
    }
    out.sites.push_back(x);
    out.delta.push_back(q.values()[idx] / p - W_lk * rev(x));
  });
  return out;
}

LLTResidual llt_residual(const env::EnvironmentField& field, const env::TemperatureProfile& profile, int k,
                         int lk, double alpha, BoxPolicy policy) {
  PolymerState state(field, profile, k, policy);
  double W_lk = 1.0;
  while (state.time() < k) {
    state.step();
    if (state.time() == lk) W_lk = state.partition();
  }
  return llt_residual(state, W_lk, lk, alpha);
}

void write_snapshot(std::ostream& out, const PolymerState& state) {
  const Slab& s = state.slab();
  const int d = s.dim();
  const int r = state.radius();
  put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(state.time()));
  put_u32(out, static_cast<std::uint32_t>(r));
  put_u32(out, static_cast<std::uint32_t>(state.time() & 1));
  s.for_each_site(r, [&](const Site&, std::size_t idx) {
    const auto bits = std::bit_cast<std::uint64_t>(s.values()[idx]);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(b, 8);
  });
}

Snapshot read_snapshot(std::istream& in) {
  Snapshot s;
  s.d = static_cast<int>(get_u32(in));
  s.k = static_cast<int>(get_u32(in));
  s.radius = static_cast<int>(get_u32(in));
  s.parity = static_cast<int>(get_u32(in));
  if (s.d < 1 || s.d > kMaxDim || s.radius < 0 || s.parity > 1) throw ParameterError("corrupt slab snapshot header");
  std::size_t n = 1;
  for (int j = 0; j < s.d; ++j) n *= static_cast<std::size_t>(2 * s.radius + 1);
  s.values.resize(n);
  for (auto& v : s.values) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw ParameterError("truncated slab snapshot");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return s;
}

}  // namespace polymerlab::polymer
