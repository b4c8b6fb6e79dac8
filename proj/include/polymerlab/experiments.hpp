#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "polymerlab/config.hpp"
#include "polymerlab/environment.hpp"
#include "polymerlab/lattice.hpp"
#include "polymerlab/oracle.hpp"

namespace polymerlab::experiments {

/// Exact, environment-free quantities shared by every replicate of a run.
struct Reference {
  env::TemperatureProfile profile;
  std::optional<oracle::Adjudication> adjudication;
  double ew_inf_sq = 1.0;  ///< closed form picked by the adjudication
  double sigma2 = 0.0;
  double c_K = 0.0;        ///< 1 - K^{-(d-2)/2}
  std::vector<int> lk;     ///< l_k for k = 0..N
  std::vector<double> second_moment;       ///< E[W_k^2], k = 0..N
  std::vector<double> increment_variance;  ///< E[D_{k+1}^2], k = 0..N-1
  /// E[W_{l_k}^2] Σ_{|x|<=α√k} P(S_{k+1}=x)^2, k = 0..N-1 (α = homog_alpha)
  std::vector<double> abar_weight;
  std::vector<double> truncated;  ///< n^{(d-2)/2} E[(W_{Kn} - W_n)^2] per n in n_grid

  struct SiteLaw {
    int k = 0;
    int lk = 0;
    Slab law{3, 0};        ///< P(S_{k+1} = ·)
    double EY = 1.0;       ///< E[(←W^x_{k+1,l_k})^2] = E[W_{l_k}^2]
    double p2_sum = 0.0;   ///< Σ_{ball} P(S_{k+1}=x)^2
  };
  std::vector<SiteLaw> llt;
  std::vector<SiteLaw> homog;

  bool degenerate() const { return profile.kappa2 == 0.0; }
  bool has_sigma() const { return profile.sigma2.has_value() && profile.in_L2_region; }
};

Reference make_reference(const ExperimentConfig& config);

struct PerN {
  int n = 0;
  int N = 0;
  double W_n = 1.0;
  double W_N = 1.0;
  double T = 0.0;       ///< n^{(d-2)/4} (W_N - W_n)
  double U = 0.0;       ///< T / W_n
  double L = 0.0;       ///< n^{(d-2)/4} (log W_N - log W_n)
  double s2 = 0.0;      ///< n^{(d-2)/2} Σ_{k=n}^{N-1} E[D_{k+1}^2 | F_k]
  double A_bar = 0.0;   ///< homogenized bracket over the same k range
  double D_next = 0.0;  ///< W_{n+1} - W_n
  double bracket = 0.0; ///< E[D_{n+1}^2 | F_n]
  std::vector<double> lindeberg;  ///< per eps: n^{(d-2)/2} Σ D^2 1{n^{(d-2)/4}|D| > eps}
  std::vector<double> window;     ///< per alpha: n^{(d-2)/2} Σ window mass
  friend bool operator==(const PerN&, const PerN&) = default;
};

struct FluctuationSample {
  std::uint64_t replicate = 0;
  double W_n0 = 1.0;
  double clipped_fraction = 0.0;
  std::vector<PerN> per_n;
  std::vector<double> homog_M;  ///< k^{d/2} Σ_{ball} (Y_x - E Y) P(S_{k+1}=x)^2 per homog k
  friend bool operator==(const FluctuationSample&, const FluctuationSample&) = default;
};

struct ReplicateResult {
  FluctuationSample sample;
  std::vector<std::vector<Site>> llt_sites;     ///< per llt k
  std::vector<std::vector<double>> llt_delta;   ///< per llt k
};

/// One environment, one forward pass. Resource errors name the replicate.
ReplicateResult run_replicate(const ExperimentConfig& config, const Reference& ref, std::uint64_t r);

/// Per-site running sums of δ and δ^2, accumulated in replicate order.
struct LLTSums {
  int k = 0;
  int lk = 0;
  std::vector<Site> sites;
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::uint64_t count = 0;
};

struct Block {
  int index = 0;
  std::vector<FluctuationSample> samples;
  std::vector<LLTSums> llt;
};

/// Replicates [index*block_size, ...) on `threads` workers; the result does
/// not depend on the thread count.
Block run_block(const ExperimentConfig& config, const Reference& ref, int index, int threads);

struct Dataset {
  std::vector<FluctuationSample> samples;  ///< sorted by replicate id
  std::vector<LLTSums> llt;
};

/// Blocks may arrive in any order; they are combined in index order.
Dataset merge(std::vector<Block> blocks);

/// POLYMERLAB_THREADS if set, otherwise the hardware concurrency.
int thread_count();

}  // namespace polymerlab::experiments
