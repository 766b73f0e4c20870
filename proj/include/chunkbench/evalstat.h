#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chunkbench/corpus.h"
#include "chunkbench/providers.h"
#include "chunkbench/retrieval.h"
#include "chunkbench/strategies.h"

namespace chunkbench {

// ---------------------------------------------------------------------------
// QA data

struct QARecord {
  std::string query_id;
  std::string question;
  std::vector<std::string> gold_section_ids;  // normalized, deduplicated
};

struct QADataset {
  std::vector<QARecord> records;
  /// Gold ids the corpus does not contain, as "query_id:section".
  std::vector<std::string> unknown_gold;

  double mean_gold_size() const;
};

/// JSON lines {"id", "question", "gold_sections": [...]}. Throws DataError
/// on empty gold sets, duplicate ids or malformed lines. With a corpus,
/// unknown gold ids are collected and logged.
QADataset load_qa_dataset(std::istream& in, const Corpus* corpus = nullptr);
QADataset load_qa_dataset(const std::filesystem::path& path, const Corpus* corpus = nullptr);

/// |top-k ∩ gold| / |gold| over the first k ranked ids.
double recall_at_k(std::span<const std::string> ranked_ids,
                   std::span<const std::string> gold, std::size_t k);
double recall_at_k(const SectionRanking& ranking, std::span<const std::string> gold);

// ---------------------------------------------------------------------------
// Repeated-measures matrix

/// n questions x m methods, row-major.
struct EvalMatrix {
  std::vector<std::string> question_ids;
  std::vector<std::string> method_tags;
  std::vector<double> values;

  EvalMatrix() = default;
  EvalMatrix(std::vector<std::string> questions, std::vector<std::string> methods);

  std::size_t rows() const { return question_ids.size(); }
  std::size_t cols() const { return method_tags.size(); }
  double& at(std::size_t q, std::size_t m) { return values[q * cols() + m]; }
  double at(std::size_t q, std::size_t m) const { return values[q * cols() + m]; }
  std::vector<double> column(std::size_t m) const;
  /// Column index of a method tag; throws DataError when absent.
  std::size_t method_index(std::string_view tag) const;
};

double mean(std::span<const double> xs);

// ---------------------------------------------------------------------------
// Tests

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t df = 0;
  std::vector<double> mean_ranks;  // per method, rank 1 = lowest value
};

/// Tie-corrected Friedman chi-square over the rows. Throws DataError unless
/// rows >= 2 and cols >= 3.
FriedmanResult friedman_test(const EvalMatrix& matrix);

double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);
/// P(X >= x) for X ~ chi-square(df).
double chi_square_upper_tail(double x, double df);

/// Standard normal quantile, e.g. 1.959964 for p = 0.975.
double normal_quantile(double p);

struct PermutationResult {
  double p_value = 1.0;
  double observed = 0.0;  // mean(a - b)
  bool exhaustive = false;
  std::uint64_t permutations = 0;
};

inline constexpr std::size_t kExhaustivePermutationLimit = 20;

/// Paired sign-flip test on mean(a - b). Exhaustive (p = count / 2^n) for
/// n <= exhaustive_limit, else `draws` seeded sign patterns with
/// p = (count + 1) / (draws + 1). Throws DataError on length mismatch or
/// empty input.
PermutationResult paired_permutation_test(std::span<const double> a, std::span<const double> b,
                                          std::size_t draws, std::uint64_t seed,
                                          std::size_t exhaustive_limit =
                                              kExhaustivePermutationLimit);

/// Holm step-down adjustment, returned in input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile interval of the mean over `draws` seeded resamples. Throws
/// DataError for fewer than two differences.
Interval paired_bootstrap_ci(std::span<const double> diffs, std::size_t draws,
                             std::uint64_t seed, double level = 0.95);

/// mean +- z * sd / sqrt(n).
Interval normal_ci(std::span<const double> values, double level = 0.95);

struct Comparison {
  std::string method;
  std::string baseline;
  double mean_difference = 0.0;
  double p_raw = 1.0;
  double p_holm = 1.0;
  bool exhaustive = false;
  Interval bootstrap_ci;
};

struct StatsConfig {
  std::string baseline = "Section";
  std::size_t permutation_draws = 10000;
  std::size_t bootstrap_draws = 10000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct StatsReport {
  std::string metric;
  std::optional<FriedmanResult> friedman;  // absent with fewer than 3 methods
  std::vector<Comparison> comparisons;     // every method against the baseline
};

/// Friedman omnibus plus Holm-adjusted permutation tests and bootstrap CIs
/// of each method against the baseline column.
StatsReport compare_methods(const EvalMatrix& matrix, const StatsConfig& config,
                            std::string metric);

nlohmann::ordered_json to_json(const StatsReport& report);

// ---------------------------------------------------------------------------
// Builds

struct BuildMeasurement {
  std::string strategy_tag;
  std::filesystem::path index_path;
  std::filesystem::path chunk_manifest_path;
  double build_seconds = 0.0;
  std::uint64_t persisted_bytes = 0;
  std::size_t base_units = 0;
  std::size_t indexed_units = 0;
  std::size_t embed_calls = 0;
  std::size_t embed_cache_hits = 0;
  std::size_t generation_calls = 0;
  std::size_t generation_cache_hits = 0;
  std::size_t generation_warnings = 0;

  nlohmann::ordered_json to_json() const;
  static BuildMeasurement from_json(const nlohmann::json& j);
};

/// Builds the strategy, saves `<out_dir>/<slug>.scix` and
/// `<out_dir>/<slug>.chunks.jsonl`, and times the whole build including
/// provider calls. Provider failures propagate; completed provider results
/// stay cached, so rerunning resumes.
BuildMeasurement measure_build(const StrategyConfig& config, const Corpus& corpus,
                               std::span<const BaseUnit> propositions,
                               EmbeddingService& embedder, GenerationService& generator,
                               const std::filesystem::path& out_dir, std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Reports

struct MethodSummary {
  std::string method;
  double mean_recall = 0.0;
  Interval normal_ci;
  Interval bootstrap_ci;
  double mean_latency_ms = 0.0;
  double build_seconds = 0.0;
  std::uint64_t persisted_bytes = 0;

  double persisted_mb() const { return static_cast<double>(persisted_bytes) / (1024.0 * 1024.0); }
};

/// Columns: method, mean_recall, ci_low, ci_high, mean_latency_ms,
/// build_seconds, persisted_mb (normal-theory CI).
void write_summary_csv(std::ostream& out, std::span<const MethodSummary> rows);

}  // namespace chunkbench
