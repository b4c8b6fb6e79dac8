#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "polymerlab/environment.hpp"
#include "polymerlab/lattice.hpp"

namespace polymerlab::polymer {

/// Box growth: exact diamond support until the clip radius
/// min(k, ceil(sigmas sqrt(k/d)) + 2) takes over. Mass pushed past the box is
/// accounted for, never renormalized.
struct BoxPolicy {
  double sigmas = 7.0;
  std::size_t max_cells = std::size_t{1} << 27;
};

/// What one forward step k -> k+1 reveals about the martingale increment.
/// q_k(x) = (1/2d) Σ_{y~x} w_k(y) is the normalized mass arriving at (k+1, x)
/// before the row-(k+1) disorder is applied.
struct IncrementRecord {
  int k = 0;
  double D = 0.0;        ///< Σ_x q_k(x) η_k(x)
  double D_slab = 0.0;   ///< W_{k+1} - W_k from slab sums
  double bracket = 0.0;  ///< κ2 Σ_x q_k(x)^2 = E[D_{k+1}^2 | F_k]
  std::vector<double> window_mass;  ///< κ2 Σ_{|x|>α√k} q_k(x)^2, one per α
  double clipped = 0.0;  ///< mass of q_k that fell outside the box
};

class PolymerState {
 public:
  /// Point mass at the origin at time 0. `k_final` sizes the buffers.
  PolymerState(env::EnvironmentField field, env::TemperatureProfile profile, int k_final,
               BoxPolicy policy = {}, std::vector<double> alpha_grid = {});

  int time() const noexcept { return k_; }
  int radius() const noexcept { return radius_; }
  int k_final() const noexcept { return k_final_; }
  /// W_k = Σ_x w_k(x).
  double partition() const noexcept { return W_; }
  const Slab& slab() const noexcept { return *cur_; }
  double weight(const Site& x) const;
  const env::EnvironmentField& field() const noexcept { return field_; }
  const env::TemperatureProfile& profile() const noexcept { return profile_; }
  std::span<const double> alpha_grid() const noexcept { return alphas_; }

  /// Cumulative clipped mass divided by the W at which it was lost.
  double clipped_fraction() const noexcept { return clipped_fraction_; }
  /// Nonzero subnormal cells in the current slab.
  std::size_t subnormal_cells() const noexcept { return subnormal_; }

  /// Advances to k+1 and returns the increment record of step k.
  IncrementRecord step();

 private:
  env::EnvironmentField field_;
  env::TemperatureProfile profile_;
  BoxPolicy policy_;
  std::vector<double> alphas_;
  int k_final_;
  int k_ = 0;
  int radius_ = 0;
  double W_ = 1.0;
  double clipped_fraction_ = 0.0;
  std::size_t subnormal_ = 0;
  Slab a_;
  Slab b_;
  Slab* cur_;
  Slab* next_;
  std::vector<double> row_;
};

/// q_k over [-radius, radius]^d for a state at time k (not advanced).
Slab arrival_mass(const PolymerState& state, int radius);

/// Bracket, window mass and increment of the next step, computed from the
/// state without advancing it.
IncrementRecord increment_bracket(const PolymerState& state, double alpha);

/// W_0..W_n on one environment.
std::vector<double> partition_function(const env::EnvironmentField& field,
                                       const env::TemperatureProfile& profile, int n,
                                       BoxPolicy policy = {});

/// ←W^x_{k+1,l} = E_x[exp Σ_{i=1}^{l} (β ω(k+1-i, S_i) - λ)], reading rows
/// k, k-1, ..., k+1-l only.
struct ReversedPartition {
  int anchor = 0;  ///< k+1
  int depth = 0;   ///< l
  std::vector<Site> sites;
  std::vector<double> values;
};

/// Dense variant: every site of [-radius, radius]^d in one backward sweep.
Slab reversed_partition_slab(const env::EnvironmentField& field,
                             const env::TemperatureProfile& profile, int k, int l, int radius);

/// Throws DomainError when l >= k.
ReversedPartition reversed_partition(const env::EnvironmentField& field,
                                     const env::TemperatureProfile& profile, int k, int l,
                                     std::span<const Site> sites);

/// δ_k^x = E[e_k | S_{k+1}=x] - W_{l_k} ←W^x_{k+1,l_k} over sites |x| <= α√k
/// reachable at time k+1.
struct LLTResidual {
  int k = 0;
  int lk = 0;
  double alpha = 0.0;
  std::vector<Site> sites;
  std::vector<double> delta;
  int skipped = 0;  ///< sites in the ball with P(S_{k+1}=x) = 0
};

/// From a state at time k and W_{l_k}. Throws DomainError unless 2 l_k < k.
/// `law` may supply the exact law of S_{k+1} (as from walk::convolution_power)
/// so repeated calls skip the convolution.
LLTResidual llt_residual(const PolymerState& state, double W_lk, int lk, double alpha,
                         const Slab* law = nullptr);

/// Runs its own forward pass to time k.
LLTResidual llt_residual(const env::EnvironmentField& field, const env::TemperatureProfile& profile,
                         int k, int lk, double alpha, BoxPolicy policy = {});

/// ceil(k^exponent), guarded against k^exponent landing a rounding error
/// above an integer.
int default_lk(int k, double exponent = 0.4);

/// Little-endian snapshot: int32 d, int32 k, int32 radius, int32 parity, then
/// the (2 radius + 1)^d weights of the active box, last coordinate fastest.
void write_snapshot(std::ostream& out, const PolymerState& state);

struct Snapshot {
  int d = 0;
  int k = 0;
  int radius = 0;
  int parity = 0;
  std::vector<double> values;
};
Snapshot read_snapshot(std::istream& in);

}  // namespace polymerlab::polymer
