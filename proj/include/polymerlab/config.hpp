#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polymerlab/environment.hpp"

namespace polymerlab::experiments {

/// Everything a run depends on. Replicate r reads the environment seeded
/// with seed_base + r.
struct ExperimentConfig {
  int d = 3;
  env::DisorderFamily family = env::DisorderFamily::standard_gaussian();
  double beta = 0.4;
  std::vector<int> n_grid{8, 16, 32};
  int horizon_factor = 8;  ///< W_N with N = K n stands in for W_∞
  int replicates = 800;
  std::uint64_t seed_base = 1;
  int block_size = 50;
  double lk_exponent = 0.4;
  double box_sigmas = 6.0;
  std::vector<double> alpha_grid{2, 4, 6, 8};
  double homog_alpha = 6.0;
  std::vector<int> homog_k{16, 64};
  std::vector<int> llt_k{8, 32};
  double llt_alpha = 4.0;
  std::vector<double> eps_grid{0.05, 0.1, 0.2, 0.5};
  int mixing_n0 = 0;  ///< 0 selects min(n_grid) / 2
  bool allow_outside_l2 = false;

  int max_n() const;
  int horizon() const { return horizon_factor * max_n(); }
  int mixing_time() const;
  int blocks() const { return (replicates + block_size - 1) / block_size; }

  /// Throws ParameterError.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// `key = value` lines; `#` starts a comment; lists are comma separated,
/// optionally in brackets. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& c);
std::map<std::string, std::string> config_entries(const ExperimentConfig& c);

}  // namespace polymerlab::experiments
