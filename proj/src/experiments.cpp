#include "polymerlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "polymerlab/errors.hpp"
#include "polymerlab/polymer.hpp"
#include "polymerlab/walk.hpp"

namespace polymerlab::experiments {

namespace {

int adjudication_time(int d) {
  switch (d) {
    case 3: return 400;
    case 4: return 32;
    default: return 8;
  }
}

double ball_p2(const Slab& law, int d, double r2) {
  const int radius = std::min(law.capacity(), static_cast<int>(std::floor(std::sqrt(r2))));
  double s = 0.0;
  law.for_each_site(radius, [&](const Site& x, std::size_t idx) {
    if (static_cast<double>(squared_norm(x, d)) > r2) return;
    const double p = law.values()[idx];
    s += p * p;
  });
  return s;
}

Reference::SiteLaw site_law(const ExperimentConfig& c, int k, double alpha,
                            const std::vector<double>& second_moment) {
  Reference::SiteLaw s;
  s.k = k;
  s.lk = polymer::default_lk(k, c.lk_exponent);
  s.law = walk::convolution_power(walk::WalkKernel::simple(Dimension(c.d)), k + 1);
  s.EY = second_moment.at(static_cast<std::size_t>(s.lk));
  s.p2_sum = ball_p2(s.law, c.d, alpha * alpha * k);
  return s;
}

}  // namespace

Reference make_reference(const ExperimentConfig& c) {
  c.validate();
  const Dimension dim(c.d);
  Reference ref;
  ref.profile = env::temperature_profile(c.family, c.beta, dim);
  const double l2 = ref.profile.lambda2;
  const int N = c.horizon();
  int M = N;
  for (int k : c.llt_k) M = std::max(M, k + 1);
  for (int k : c.homog_k) M = std::max(M, k + 1);

  const auto traj = oracle::overlap_dp(dim, l2, M);
  if (traj.clipped_fraction > 1e-6) throw ResourceError("overlap DP clipped more than 1e-6 of its mass");
  ref.second_moment = traj.second_moment;
  ref.increment_variance.resize(traj.pinned.size());
  for (std::size_t k = 0; k < traj.pinned.size(); ++k)
    ref.increment_variance[k] = ref.profile.kappa2 * traj.pinned[k];

  if (l2 == 0.0) {
    ref.ew_inf_sq = 1.0;
  } else if (ref.profile.in_L2_region) {
    ref.adjudication = oracle::adjudicate_second_moment(dim, l2, adjudication_time(c.d));
    ref.ew_inf_sq = ref.adjudication->closest == env::MomentVariant::geometric
                        ? ref.adjudication->geometric
                        : ref.adjudication->with_exp_factor;
  } else {
    ref.ew_inf_sq = std::numeric_limits<double>::infinity();
  }
  ref.sigma2 = ref.profile.sigma2.value_or(std::numeric_limits<double>::quiet_NaN());
  ref.c_K = 1.0 - std::pow(static_cast<double>(c.horizon_factor), -(c.d - 2) / 2.0);

  ref.lk.resize(static_cast<std::size_t>(M) + 1, 0);
  for (int k = 1; k <= M; ++k) ref.lk[static_cast<std::size_t>(k)] = polymer::default_lk(k, c.lk_exponent);

  for (int n : c.n_grid) {
    double s = 0.0;
    for (int k = n; k < c.horizon_factor * n; ++k) s += ref.increment_variance[static_cast<std::size_t>(k)];
    ref.truncated.push_back(std::pow(n, (c.d - 2) / 2.0) * s);
  }

  ref.abar_weight.assign(static_cast<std::size_t>(N), 0.0);
  walk::SrwPropagator prop(dim, N, c.box_sigmas);
  for (int t = 1; t <= N; ++t) {
    prop.step();
    const int k = t - 1;
    const double p2 = ball_p2(prop.slab(), c.d, c.homog_alpha * c.homog_alpha * k);
    ref.abar_weight[static_cast<std::size_t>(k)] = ref.second_moment[static_cast<std::size_t>(ref.lk[k])] * p2;
  }

  for (int k : c.llt_k) ref.llt.push_back(site_law(c, k, c.llt_alpha, ref.second_moment));
  for (int k : c.homog_k) ref.homog.push_back(site_law(c, k, c.homog_alpha, ref.second_moment));
  return ref;
}

ReplicateResult run_replicate(const ExperimentConfig& c, const Reference& ref, std::uint64_t r) {
  try {
    const Dimension dim(c.d);
    const env::EnvironmentField field(c.seed_base + r, c.family, dim);
    const auto& profile = ref.profile;
    const int N = c.horizon();
    const std::size_t na = c.alpha_grid.size();

    std::vector<double> W(static_cast<std::size_t>(N) + 1, 1.0), D(N), B(N), win(static_cast<std::size_t>(N) * na);
    polymer::PolymerState state(field, profile, N, polymer::BoxPolicy{c.box_sigmas}, c.alpha_grid);
    for (int k = 0; k < N; ++k) {
      const auto rec = state.step();
      W[k + 1] = state.partition();
      D[k] = rec.D_slab;
      B[k] = rec.bracket;
      for (std::size_t a = 0; a < na; ++a) win[k * na + a] = rec.window_mass[a];
    }

    ReplicateResult out;
    FluctuationSample& s = out.sample;
    s.replicate = r;
    s.W_n0 = W[static_cast<std::size_t>(c.mixing_time())];
    s.clipped_fraction = state.clipped_fraction();
    for (int n : c.n_grid) {
      PerN p;
      p.n = n;
      p.N = c.horizon_factor * n;
      const double scale = std::pow(n, (c.d - 2) / 4.0);
      const double scale2 = scale * scale;
      p.W_n = W[n];
      p.W_N = W[p.N];
      p.T = scale * (p.W_N - p.W_n);
      p.U = p.T / p.W_n;
      p.L = scale * (std::log(p.W_N) - std::log(p.W_n));
      p.D_next = D[n];
      p.bracket = B[n];
      p.lindeberg.assign(c.eps_grid.size(), 0.0);
      p.window.assign(na, 0.0);
      double s2 = 0.0, abar = 0.0;
      for (int k = n; k < p.N; ++k) {
        s2 += B[k];
        const double wl = W[ref.lk[k]];
        abar += wl * wl * ref.abar_weight[k];
        const double d2 = D[k] * D[k];
        for (std::size_t e = 0; e < c.eps_grid.size(); ++e)
          if (scale * std::abs(D[k]) > c.eps_grid[e]) p.lindeberg[e] += d2;
        for (std::size_t a = 0; a < na; ++a) p.window[a] += win[k * na + a];
      }
      p.s2 = scale2 * s2;
      p.A_bar = profile.kappa2 * scale2 * abar;
      for (auto& v : p.lindeberg) v *= scale2;
      for (auto& v : p.window) v *= scale2;
      s.per_n.push_back(std::move(p));
    }

    if (!ref.llt.empty()) {
      int kmax = 0;
      for (const auto& l : ref.llt) kmax = std::max(kmax, l.k);
      // The LLT ball reaches the edge of the diamond, so this pass is unclipped.
      polymer::PolymerState exact(field, profile, kmax, polymer::BoxPolicy{1e300});
      std::vector<double> We(static_cast<std::size_t>(kmax) + 1, 1.0);
      std::vector<std::size_t> order(ref.llt.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ref.llt[a].k < ref.llt[b].k; });
      out.llt_sites.resize(ref.llt.size());
      out.llt_delta.resize(ref.llt.size());
      for (std::size_t i : order) {
        const auto& l = ref.llt[i];
        while (exact.time() < l.k) {
          exact.step();
          We[exact.time()] = exact.partition();
        }
        auto res = polymer::llt_residual(exact, We[l.lk], l.lk, c.llt_alpha, &l.law);
        out.llt_sites[i] = std::move(res.sites);
        out.llt_delta[i] = std::move(res.delta);
      }
    }

    for (const auto& h : ref.homog) {
      const double r2 = c.homog_alpha * c.homog_alpha * h.k;
      const int radius = std::min(h.k + 1, static_cast<int>(std::floor(std::sqrt(r2))));
      const Slab rev = polymer::reversed_partition_slab(field, profile, h.k, h.lk, radius);
      double y = 0.0;
      h.law.for_each_site(radius, [&](const Site& x, std::size_t idx) {
        if (static_cast<double>(squared_norm(x, c.d)) > r2) return;
        const double p = h.law.values()[idx];
        const double w = rev(x);
        y += w * w * p * p;
      });
      s.homog_M.push_back(std::pow(h.k, c.d / 2.0) * (y - h.EY * h.p2_sum));
    }
    return out;
  } catch (const ResourceError& e) {
    throw ResourceError("replicate " + std::to_string(r) + ": " + e.what());
  }
}

Block run_block(const ExperimentConfig& c, const Reference& ref, int index, int threads) {
  const std::uint64_t first = static_cast<std::uint64_t>(index) * static_cast<std::uint64_t>(c.block_size);
  const std::uint64_t last =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(c.replicates), first + static_cast<std::uint64_t>(c.block_size));
  if (index < 0 || first >= last) throw ParameterError("block index out of range");
  const std::size_t count = last - first;
  std::vector<ReplicateResult> results(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i] = run_replicate(c, ref, first + i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  Block b;
  b.index = index;
  for (std::size_t j = 0; j < ref.llt.size(); ++j) {
    LLTSums s;
    s.k = ref.llt[j].k;
    s.lk = ref.llt[j].lk;
    s.sites = results[0].llt_sites[j];
    s.sum.assign(s.sites.size(), 0.0);
    s.sum_sq.assign(s.sites.size(), 0.0);
    for (const auto& res : results) {
      const auto& d = res.llt_delta[j];
      if (d.size() != s.sites.size()) throw ParameterError("LLT site sets differ between replicates");
      for (std::size_t i = 0; i < d.size(); ++i) {
        s.sum[i] += d[i];
        s.sum_sq[i] += d[i] * d[i];
      }
      ++s.count;
    }
    b.llt.push_back(std::move(s));
  }
  for (auto& res : results) b.samples.push_back(std::move(res.sample));
  return b;
}

Dataset merge(std::vector<Block> blocks) {
  std::sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) { return a.index < b.index; });
  for (std::size_t i = 1; i < blocks.size(); ++i)
    if (blocks[i].index == blocks[i - 1].index) throw ParameterError("duplicate block " + std::to_string(blocks[i].index));
  Dataset ds;
  for (auto& b : blocks) {
    for (auto& s : b.samples) ds.samples.push_back(std::move(s));
    if (ds.llt.empty()) {
      ds.llt = std::move(b.llt);
      continue;
    }
    if (b.llt.size() != ds.llt.size()) throw ParameterError("blocks disagree on LLT grid");
    for (std::size_t j = 0; j < ds.llt.size(); ++j) {
      auto& acc = ds.llt[j];
      const auto& add = b.llt[j];
      if (add.k != acc.k || add.sites.size() != acc.sites.size()) throw ParameterError("blocks disagree on LLT sites");
      for (std::size_t i = 0; i < acc.sum.size(); ++i) {
        acc.sum[i] += add.sum[i];
        acc.sum_sq[i] += add.sum_sq[i];
      }
      acc.count += add.count;
    }
  }
  std::stable_sort(ds.samples.begin(), ds.samples.end(),
                   [](const auto& a, const auto& b) { return a.replicate < b.replicate; });
  return ds;
}

int thread_count() {
  if (const char* v = std::getenv("POLYMERLAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n >= 1) return static_cast<int>(std::min<long>(n, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace polymerlab::experiments
