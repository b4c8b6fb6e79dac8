#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polymerlab/lattice.hpp"

namespace polymerlab::env {

enum class Family { standard_gaussian, rademacher, centered_bernoulli, shifted_exponential };

/// Law of a single disorder variable ω(i, x). The set of families is closed so
/// that λ(β) = log E[e^{βω}] is always available in closed form.
class DisorderFamily {
 public:
  static DisorderFamily standard_gaussian();
  static DisorderFamily rademacher();
  /// 1{U < p} - p.
  static DisorderFamily centered_bernoulli(double p);
  /// Exp(rate) - 1/rate.
  static DisorderFamily shifted_exponential(double rate);
  /// Accepts "gaussian"/"standard_gaussian", "rademacher",
  /// "bernoulli"/"centered_bernoulli" (params: p), "exponential"/
  /// "shifted_exponential" (params: rate).
  static DisorderFamily parse(const std::string& name, const std::vector<double>& params);

  Family tag() const noexcept { return tag_; }
  double parameter() const noexcept { return param_; }
  std::string name() const;
  std::vector<double> params() const;

  /// log E[e^{βω}]; +inf where the moment generating function diverges.
  double lambda(double beta) const;
  /// Maps a uniform u in (0,1) to a draw of ω.
  double transform(double u) const;
  double cdf(double x) const;
  bool discrete() const noexcept;

  friend bool operator==(const DisorderFamily&, const DisorderFamily&) = default;

 private:
  DisorderFamily(Family tag, double param) : tag_(tag), param_(param) {}
  Family tag_;
  double param_;
};

/// Standard normal quantile (Wichura, AS241), relative accuracy ~1e-16.
double normal_quantile(double u);
double normal_cdf(double x);

/// 64-bit finalizer of SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic i.i.d. field ω(i, x) on N x Z^d. Each value is a keyed hash
/// of (seed, i, packed x), so any site can be read in any order.
/// Coordinates are packed as 16-bit two's complement; |x_j| >= 2^15 is rejected.
class EnvironmentField {
 public:
  EnvironmentField(std::uint64_t seed, DisorderFamily family, Dimension d);

  std::uint64_t seed() const noexcept { return seed_; }
  const DisorderFamily& family() const noexcept { return family_; }
  Dimension dimension() const noexcept { return d_; }

  double omega(int i, const Site& x) const;
  /// Uniform in (0,1) underlying ω(i, x).
  double uniform(int i, const Site& x) const;

  /// Writes ω(i, start + 2c e_{d-1}) for c = 0..count-1.
  void fill_row(int i, const Site& start, int count, double* out) const;

 private:
  std::uint64_t key(int i, const Site& x) const;

  std::uint64_t seed_;
  DisorderFamily family_;
  Dimension d_;
};

struct TemperatureProfile {
  int d = 3;
  double beta = 0.0;
  double lambda = 0.0;
  double lambda2 = 0.0;  ///< λ(2β) - 2λ(β)
  double kappa2 = 0.0;   ///< e^{λ2} - 1
  bool in_L2_region = true;
  double beta2 = 0.0;  ///< +inf when λ2 stays below log(1/π_d)
  std::optional<double> sigma2;
  double pi_d = 0.0;
  double zeta_d = 0.0;
};

/// L2 boundary: solves λ2(β) = log(1/π_d) by bisection to 1e-10.
double beta2(const DisorderFamily& family, Dimension d);

TemperatureProfile temperature_profile(const DisorderFamily& family, double beta, Dimension d);

/// Two closed forms for E[W_∞^2] that differ by a factor e^{λ2}.
enum class MomentVariant {
  with_exp_factor,  ///< (1-π_d) e^{λ2} / (1 - π_d e^{λ2})
  geometric,        ///< (1-π_d) / (1 - π_d e^{λ2})
};
std::string to_string(MomentVariant v);

/// Throws DomainError outside the L2 region.
double second_moment_winfty(const TemperatureProfile& profile, MomentVariant variant);

}  // namespace polymerlab::env
