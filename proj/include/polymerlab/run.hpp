#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "polymerlab/checks.hpp"
#include "polymerlab/experiments.hpp"

namespace polymerlab::experiments {

inline constexpr const char* kToolVersion = "polymerlab 0.1.0";

/// Layout of a run directory:
///   manifest.json   config, golden constants, status, timestamps
///   samples.csv     one row per replicate x n
///   report.json     test verdicts
///   raw/block_NNNNN.json   per-block samples and LLT sums (resume points)
///   cache/walk_dD.json     walk constants used by the run
struct RunOptions {
  int threads = 1;
  int max_new_blocks = -1;  ///< stop early after this many new blocks (-1: no limit)
  std::ostream* log = nullptr;
};

struct RunResult {
  bool complete = false;
  bool stale = false;
  bool reused = false;  ///< a finished run was found and nothing was recomputed
  bool all_pass = false;
  nlohmann::json report;
  int exit_code() const { return complete && all_pass ? 0 : 1; }
};

/// Throws ParameterError (exit code 2) for invalid configs or a directory
/// that belongs to a different config.
RunResult execute_run(const ExperimentConfig& config, const std::filesystem::path& dir,
                      const RunOptions& options = {});

/// Write-temp-then-rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

nlohmann::json block_to_json(const Block& b);
Block block_from_json(const nlohmann::json& j);

std::vector<std::string> samples_header(const ExperimentConfig& c);
std::string samples_csv(const Dataset& ds, const ExperimentConfig& c);
/// Validates the header against the config; LLT sums are not part of the CSV.
Dataset read_samples_csv(const std::string& text, const ExperimentConfig& c);

/// Human-readable table of a report.json. Sets `failed` when a gating check
/// failed or the run is incomplete.
std::string summarize_report(const nlohmann::json& report, bool& failed);

}  // namespace polymerlab::experiments
