#include "chunkbench/retrieval.h"

#include <algorithm>
#include <chrono>
#include <unordered_map>

#include "chunkbench/error.h"

namespace chunkbench {

std::string_view to_string(Aggregation a) { return a == Aggregation::max ? "max" : "sum"; }

Aggregation parse_aggregation(std::string_view name) {
  if (name == "max") return Aggregation::max;
  if (name == "sum") return Aggregation::sum;
  throw ConfigError("unknown aggregation \"" + std::string(name) + "\" (expected max or sum)");
}

std::vector<std::string> SectionRanking::section_ids() const {
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.section_id);
  return out;
}

std::vector<ScoredRow> IndexView::candidates(std::span<const float> query,
                                             const RetrievalConfig& config,
                                             SearchStats* stats) const {
  if (const auto* flat = std::get_if<const VectorIndex*>(&target_)) {
    return search_topk(**flat, query, config.k_units, stats);
  }
  return traverse_raptor(*std::get<const RaptorIndex*>(target_), query, config.beam,
                         config.k_units, stats);
}

const UnitMetadata& IndexView::metadata(std::size_t row) const {
  if (const auto* flat = std::get_if<const VectorIndex*>(&target_)) return (*flat)->metadata(row);
  return std::get<const RaptorIndex*>(target_)->vectors.metadata(row);
}

std::size_t IndexView::unit_count() const {
  if (const auto* flat = std::get_if<const VectorIndex*>(&target_)) return (*flat)->count();
  return std::get<const RaptorIndex*>(target_)->leaf_count();
}

std::size_t IndexView::dim() const {
  if (const auto* flat = std::get_if<const VectorIndex*>(&target_)) return (*flat)->dim();
  return std::get<const RaptorIndex*>(target_)->vectors.dim();
}

SectionRanking aggregate_sections(std::span<const ScoredRow> candidates, const IndexView& index,
                                  const RetrievalConfig& config, const SectionOrder& order) {
  std::unordered_map<std::string_view, double> scores;
  for (const auto& c : candidates) {
    for (const auto& section : index.metadata(c.row).parent_section_ids) {
      auto [it, fresh] = scores.try_emplace(section, c.score);
      if (fresh) continue;
      if (config.aggregation == Aggregation::max) {
        it->second = std::max(it->second, c.score);
      } else {
        it->second += c.score;
      }
    }
  }

  SectionRanking ranking;
  ranking.k_units = config.k_units;
  ranking.k_sections = config.k_sections;
  for (const auto& [id, score] : scores) ranking.ranked.push_back({std::string(id), score});
  auto better = [&](const RankedSection& a, const RankedSection& b) {
    if (a.score != b.score) return a.score > b.score;
    return order.less(a.section_id, b.section_id);
  };
  const std::size_t keep = std::min(config.k_sections, ranking.ranked.size());
  std::partial_sort(ranking.ranked.begin(),
                    ranking.ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                    ranking.ranked.end(), better);
  ranking.ranked.resize(keep);
  return ranking;
}

SectionRanking retrieve_sections(std::span<const float> query, const IndexView& index,
                                 const RetrievalConfig& config, const SectionOrder& order,
                                 SearchStats* stats) {
  if (index.unit_count() == 0) throw ConfigError("cannot retrieve from an empty index");
  if (config.k_units == 0 || config.k_sections == 0) {
    throw ConfigError("k_units and k_sections must be >= 1");
  }
  auto candidates = index.candidates(query, config, stats);
  return aggregate_sections(candidates, index, config, order);
}

TimedRanking timed_retrieve(std::span<const float> query, const IndexView& index,
                            const RetrievalConfig& config, const SectionOrder& order,
                            std::size_t repetitions) {
  if (repetitions == 0) throw ConfigError("timed_retrieve needs at least one repetition");
  using Clock = std::chrono::steady_clock;
  TimedRanking out;
  out.ranking = retrieve_sections(query, index, config, order);  // warm-up
  double total = 0.0;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto start = Clock::now();
    auto ranking = retrieve_sections(query, index, config, order);
    const auto stop = Clock::now();
    const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
    out.latency_ms.push_back(ms);
    total += ms;
    if (ranking != out.ranking) throw Error("retrieval is not deterministic across repetitions");
  }
  out.mean_latency_ms = total / static_cast<double>(repetitions);
  return out;
}

TimedRanking run_query(EmbeddingService& embedder, const std::string& query_id,
                       std::string_view question, const IndexView& index,
                       const RetrievalConfig& config, const SectionOrder& order,
                       std::size_t repetitions) {
  const auto query = embedder.embed(question);
  auto run = timed_retrieve(query.values, index, config, order, repetitions);
  run.ranking.query_id = query_id;
  return run;
}

nlohmann::ordered_json run_record(const TimedRanking& run, std::string_view strategy_tag) {
  nlohmann::ordered_json ranked = nlohmann::ordered_json::array();
  for (const auto& r : run.ranking.ranked) {
    ranked.push_back({{"section", r.section_id}, {"score", r.score}});
  }
  return {{"query_id", run.ranking.query_id},
          {"strategy_tag", strategy_tag},
          {"ranked", std::move(ranked)},
          {"latency_ms", run.latency_ms},
          {"k_units", run.ranking.k_units},
          {"k_sections", run.ranking.k_sections}};
}

}  // namespace chunkbench
