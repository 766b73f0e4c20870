#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "chunkbench/corpus.h"
#include "chunkbench/index.h"
#include "chunkbench/providers.h"

namespace chunkbench {

/// How unit scores combine into a section score.
enum class Aggregation { max, sum };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view name);

struct RetrievalConfig {
  std::size_t k_units = 100;
  std::size_t k_sections = 10;
  Aggregation aggregation = Aggregation::max;
  std::size_t beam = 8;  // RAPTOR only
};

struct RankedSection {
  std::string section_id;
  double score = 0.0;

  bool operator==(const RankedSection&) const = default;
};

struct SectionRanking {
  std::string query_id;
  std::vector<RankedSection> ranked;
  std::size_t k_units = 0;
  std::size_t k_sections = 0;

  std::vector<std::string> section_ids() const;
  bool operator==(const SectionRanking&) const = default;
};

/// A flat or RAPTOR index to query. Non-owning.
class IndexView {
 public:
  IndexView(const VectorIndex& flat) : target_(&flat) {}
  IndexView(const RaptorIndex& raptor) : target_(&raptor) {}

  /// Candidate units for a query: search_topk, or traverse_raptor with
  /// k_leaves = k_units.
  std::vector<ScoredRow> candidates(std::span<const float> query, const RetrievalConfig& config,
                                    SearchStats* stats = nullptr) const;
  const UnitMetadata& metadata(std::size_t row) const;
  std::size_t unit_count() const;
  std::size_t dim() const;

 private:
  std::variant<const VectorIndex*, const RaptorIndex*> target_;
};

/// Propagates candidate scores to parent sections and keeps the k_sections
/// best. Ties break by `order` (corpus order).
SectionRanking aggregate_sections(std::span<const ScoredRow> candidates, const IndexView& index,
                                  const RetrievalConfig& config, const SectionOrder& order);

/// Candidates plus aggregation. Throws ConfigError on an empty index.
SectionRanking retrieve_sections(std::span<const float> query, const IndexView& index,
                                 const RetrievalConfig& config, const SectionOrder& order,
                                 SearchStats* stats = nullptr);

struct TimedRanking {
  SectionRanking ranking;
  std::vector<double> latency_ms;  // one per timed repetition
  double mean_latency_ms = 0.0;
};

/// One untimed warm-up, then `repetitions` timed runs of candidate search
/// plus aggregation on a monotonic clock. The query must already be
/// embedded.
TimedRanking timed_retrieve(std::span<const float> query, const IndexView& index,
                            const RetrievalConfig& config, const SectionOrder& order,
                            std::size_t repetitions = 5);

/// Embeds `question` (outside the timed region) and runs timed_retrieve.
TimedRanking run_query(EmbeddingService& embedder, const std::string& query_id,
                       std::string_view question, const IndexView& index,
                       const RetrievalConfig& config, const SectionOrder& order,
                       std::size_t repetitions = 5);

/// {query_id, strategy_tag, ranked: [{section, score}], latency_ms, k_units, k_sections}
nlohmann::ordered_json run_record(const TimedRanking& run, std::string_view strategy_tag);

}  // namespace chunkbench
