#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chunkbench/corpus.h"
#include "chunkbench/error.h"
#include "chunkbench/evalstat.h"
#include "chunkbench/providers.h"
#include "chunkbench/retrieval.h"
#include "chunkbench/strategies.h"

namespace chunkbench {

/// Bad command-line arguments or manifest contents; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct RunManifest {
  std::filesystem::path corpus;
  CorpusFormat corpus_format = CorpusFormat::canonical_json;
  std::filesystem::path dataset;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  ProviderConfig embedding;
  ProviderConfig generation;
  std::vector<StrategyConfig> strategies;
  RetrievalConfig retrieval;
  std::size_t repetitions = 5;
  StatsConfig stats;

  /// Relative paths resolve against `base_dir`. Throws UsageError.
  static RunManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  nlohmann::ordered_json to_json() const;

  /// Unique strategy tags, valid configs, and (optionally) existing input
  /// files. Throws UsageError.
  void validate(bool check_paths = true) const;

  /// SHA-256 of the canonical JSON rendering.
  std::string config_hash() const;

  std::filesystem::path index_dir() const { return output_dir / "indexes"; }
  std::filesystem::path runs_dir() const { return output_dir / "runs"; }
  std::filesystem::path reports_dir() const { return output_dir / "reports"; }
  std::filesystem::path propositions_path() const { return output_dir / "propositions.jsonl"; }
};

RunManifest load_manifest(const std::filesystem::path& path);

/// Parses a strategy JSON object such as {"family": "fixed", "window": 256,
/// "overlap": 64} or {"family": "flat", "unit": "subsection"}.
StrategyConfig parse_strategy(const nlohmann::json& j, std::uint64_t seed);

/// Seeds, config hash and provider identities, embedded in every report.
nlohmann::ordered_json reproducibility_stamp(const RunManifest& manifest);

struct BarSeries {
  std::vector<std::string> labels;
  std::vector<double> values;
  std::vector<Interval> errors;  // empty, or one whisker per bar
};

/// Horizontal bar chart as a standalone SVG document.
std::string render_bar_chart(const std::string& title, const std::string& axis_label,
                             const BarSeries& series);

/// Runs the command line; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace chunkbench
