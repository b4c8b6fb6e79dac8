#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "polymerlab/experiments.hpp"

namespace polymerlab::experiments {

/// One verdict: `value` compared against [lower, upper] or, for trend
/// checks, against the earlier value stored in `upper`.
struct Check {
  std::string name;
  int n = 0;  ///< grid point (n, k or 0)
  double value = std::numeric_limits<double>::quiet_NaN();
  double reference = std::numeric_limits<double>::quiet_NaN();
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  std::string tolerance;  ///< human-readable rule
  bool pass = false;
  bool gating = true;     ///< informational checks never fail a run
  std::string note;
};

struct TestReport {
  std::string name;
  std::string probes;  ///< the statement the test exercises
  bool skipped = false;
  std::string reason;
  std::vector<Check> checks;

  bool pass() const;
  const Check* find(const std::string& check, int n = -1) const;
};

/// Sample moments of W_n^2, D_{n+1}^2 and the bracket against the oracle.
TestReport moment_test(const Dataset& ds, const ExperimentConfig& c, const Reference& ref);
/// Mean-zero increments: T_n and D_{n+1}.
TestReport martingale_test(const Dataset& ds, const ExperimentConfig& c, const Reference& ref);
TestReport clt_test(const Dataset& ds, const ExperimentConfig& c, const Reference& ref);
TestReport mixing_test(const Dataset& ds, const ExperimentConfig& c, const Reference& ref);
TestReport bracket_test(const Dataset& ds, const ExperimentConfig& c, const Reference& ref);
TestReport homogenization_test(const Dataset& ds, const ExperimentConfig& c, const Reference& ref);
TestReport lindeberg_test(const Dataset& ds, const ExperimentConfig& c, const Reference& ref);
TestReport llt_test(const Dataset& ds, const ExperimentConfig& c, const Reference& ref);
/// Records which closed form for E[W_∞^2] the exact DP supports.
TestReport second_moment_adjudication(const ExperimentConfig& c, const Reference& ref);

std::vector<TestReport> run_all_tests(const Dataset& ds, const ExperimentConfig& c, const Reference& ref);

/// Replicates drawn from the limit law itself (U_n = σ G with G independent
/// of everything early), for calibrating the tests' false-rejection rate.
Dataset synthetic_dataset(const ExperimentConfig& c, const Reference& ref, std::uint64_t seed);

/// Nonnegative statistic trend: strictly smaller, or zero throughout.
bool decreased(double earlier, double later);

nlohmann::json to_json(const TestReport& r);
TestReport report_from_json(const nlohmann::json& j);

}  // namespace polymerlab::experiments
