#pragma once

#include <span>
#include <vector>

#include "polymerlab/lattice.hpp"

namespace polymerlab::walk {

struct KernelEntry {
  Site offset;
  double weight;
};

/// Finite-range transition kernel on Z^d.
class WalkKernel {
 public:
  /// Nearest-neighbour simple random walk: mass 1/(2d) on each of ±e_i.
  static WalkKernel simple(Dimension d);
  /// One step of S - S~ for two independent simple walks. Mass 1/(2d) at 0,
  /// 1/(2d)^2 on ±2e_i and 2/(2d)^2 on ±e_i±e_j (i != j).
  static WalkKernel difference(Dimension d);

  Dimension dimension() const noexcept { return d_; }
  std::span<const KernelEntry> entries() const noexcept { return entries_; }
  double weight(const Site& offset) const;
  double total_mass() const;
  /// Largest l1 norm among offsets.
  int range() const;

 private:
  WalkKernel(Dimension d, std::vector<KernelEntry> entries)
      : d_(d), entries_(std::move(entries)) {}

  Dimension d_;
  std::vector<KernelEntry> entries_;
};

/// Exact law of the k-fold convolution of `kernel` started at 0, on a box of
/// radius k * kernel.range() (no truncation).
Slab convolution_power(const WalkKernel& kernel, int k);

/// P(S_{2k} = 0) for k = 0..k_max.
struct ReturnProbabilityTable {
  int d = 0;
  int k_max = 0;
  std::vector<double> p;

  double operator[](int k) const { return p.at(static_cast<std::size_t>(k)); }
};

/// Exact return probabilities from the multinomial split of the 2k steps over
/// coordinates: the planar factor is closed form, each further coordinate adds
/// a binomial convolution. Relative accuracy ~1e-13.
ReturnProbabilityTable return_probabilities(Dimension d, int k_max);

/// Memoized table with at least `k_max` entries; shared, immutable, thread-safe.
const ReturnProbabilityTable& cached_return_probabilities(Dimension d, int k_max);

/// 2 (d / 4π)^{d/2}: leading constant of k^{d/2} P(S_{2k} = 0).
double lclt_return_constant(Dimension d);

/// 4/(d-2) (d / 4π)^{d/2}: limit of n^{(d-2)/2} Σ_{k≥n} P(S_{2(k+1)} = 0).
double zeta_closed_form(Dimension d);

/// Σ_{k>K} P(S_{2k}=0) closed with A k^{-d/2}(1 + c1/k + c2/k^2), the
/// corrections fitted on the table at K and K/2.
struct TailClosure {
  double value = 0.0;
  double error = 0.0;  ///< |two-term closure - one-term closure|
};
TailClosure return_tail(const ReturnProbabilityTable& table);

struct PiEstimate {
  double value = 0.0;
  double error = 0.0;
  int table_kmax = 0;
};

/// Return probability π_d = 1 - 1/G_d with G_d = Σ_{k≥0} P(S_{2k}=0).
/// Doubles the table until the error bound is below `tol`; throws
/// PrecisionError when `max_kmax` is not enough.
PiEstimate pi_d(Dimension d, double tol = 1e-8, int max_kmax = 1 << 15);

struct ZetaEstimate {
  double value = 0.0;
  int n = 0;
  int table_kmax = 0;
};

/// n^{(d-2)/2} Σ_{k≥n} P(S_{2(k+1)} = 0), tail past the table closed by
/// `return_tail`.
ZetaEstimate zeta_d(Dimension d, int n);

/// Gaussian local limit 2 (d/(2πk))^{d/2} exp(-d|x|^2/(2k)).
/// Throws DomainError when |x|_1 and k have different parity.
double lclt_density(Dimension d, int k, const Site& x);

/// Forward propagation of the simple random walk law on a dense box that is
/// clipped at `radius_for(k)`; the mass pushed past the box is accumulated.
class SrwPropagator {
 public:
  /// `sigmas` sets the clip radius ceil(sigmas * sqrt(k/d)) + 2 (never below
  /// the exact support radius k while that is smaller).
  SrwPropagator(Dimension d, int k_final, double sigmas);

  int time() const noexcept { return k_; }
  int radius() const noexcept { return radius_; }
  const Slab& slab() const noexcept { return *cur_; }
  double clipped_mass() const noexcept { return clipped_; }
  void step();

 private:
  Dimension d_;
  double sigmas_;
  int k_ = 0;
  int radius_ = 0;
  double clipped_ = 0.0;
  Slab a_;
  Slab b_;
  Slab* cur_;
  Slab* next_;
};

/// Clip radius used by the propagators: min(k, ceil(sigmas sqrt(k/d)) + 2).
int clip_radius(int d, int k, double sigmas);

}  // namespace polymerlab::walk

namespace polymerlab::walk {

/// π_d and 𝒵_d as used by every downstream constant. 𝒵_d is the closed form
/// 4/(d-2)(d/4π)^{d/2}; tests confirm zeta_d(d, n) converges to it.
struct GoldenConstants {
  int d = 0;
  double pi_d = 0.0;
  double pi_d_error = 0.0;
  double zeta_d = 0.0;
  int table_kmax = 0;
};
const GoldenConstants& golden_constants(Dimension d);

}  // namespace polymerlab::walk
