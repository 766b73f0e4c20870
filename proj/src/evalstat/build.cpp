#include <chrono>
#include <iomanip>
#include <ostream>

#include <spdlog/spdlog.h>

#include "chunkbench/error.h"
#include "chunkbench/evalstat.h"
#include "chunkbench/index.h"

namespace chunkbench {

nlohmann::ordered_json BuildMeasurement::to_json() const {
  return {{"strategy_tag", strategy_tag},
          {"index_path", index_path.string()},
          {"chunk_manifest_path", chunk_manifest_path.string()},
          {"build_seconds", build_seconds},
          {"persisted_bytes", persisted_bytes},
          {"base_units", base_units},
          {"indexed_units", indexed_units},
          {"embed_calls", embed_calls},
          {"embed_cache_hits", embed_cache_hits},
          {"generation_calls", generation_calls},
          {"generation_cache_hits", generation_cache_hits},
          {"generation_warnings", generation_warnings}};
}

BuildMeasurement BuildMeasurement::from_json(const nlohmann::json& j) {
  BuildMeasurement m;
  try {
    m.strategy_tag = j.at("strategy_tag").get<std::string>();
    m.index_path = j.at("index_path").get<std::string>();
    m.chunk_manifest_path = j.at("chunk_manifest_path").get<std::string>();
    m.build_seconds = j.at("build_seconds").get<double>();
    m.persisted_bytes = j.at("persisted_bytes").get<std::uint64_t>();
    m.base_units = j.value("base_units", std::size_t{0});
    m.indexed_units = j.value("indexed_units", std::size_t{0});
    m.embed_calls = j.value("embed_calls", std::size_t{0});
    m.embed_cache_hits = j.value("embed_cache_hits", std::size_t{0});
    m.generation_calls = j.value("generation_calls", std::size_t{0});
    m.generation_cache_hits = j.value("generation_cache_hits", std::size_t{0});
    m.generation_warnings = j.value("generation_warnings", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed build record: ") + e.what());
  }
  return m;
}

BuildMeasurement measure_build(const StrategyConfig& config, const Corpus& corpus,
                               std::span<const BaseUnit> propositions,
                               EmbeddingService& embedder, GenerationService& generator,
                               const std::filesystem::path& out_dir, std::size_t workers) {
  using Clock = std::chrono::steady_clock;
  const std::size_t embed_calls = embedder.stats().backend_calls;
  const std::size_t embed_hits = embedder.stats().cache_hits;
  const std::size_t gen_calls = generator.stats().backend_calls;
  const std::size_t gen_hits = generator.stats().cache_hits;
  const std::size_t gen_warnings = generator.stats().warnings;
  const std::size_t embed_stored = embedder.stats().stored;
  const std::size_t gen_stored = generator.stats().stored;

  BuildMeasurement m;
  m.strategy_tag = config.tag();
  m.index_path = out_dir / (config.slug() + ".scix");
  m.chunk_manifest_path = out_dir / (config.slug() + ".chunks.jsonl");

  const auto start = Clock::now();
  BuildOutput built;
  try {
    built = build_strategy(config, corpus, propositions, embedder, generator, workers);
  } catch (const ProviderUnavailable&) {
    spdlog::error("{}: provider unavailable; {} embedding and {} generation results are cached, "
                  "rerun the build to resume",
                  m.strategy_tag, embedder.stats().stored - embed_stored,
                  generator.stats().stored - gen_stored);
    throw;
  }
  if (built.tree) {
    m.persisted_bytes = save_index(make_raptor_index(*built.tree, m.strategy_tag), m.index_path);
  } else {
    m.persisted_bytes =
        save_index(make_index(built.indexed, m.strategy_tag, embedder.dim()), m.index_path);
  }
  m.build_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  write_chunk_manifest(m.chunk_manifest_path, built.indexed);

  m.base_units = built.units.size();
  m.indexed_units = built.indexed.size();
  m.embed_calls = embedder.stats().backend_calls - embed_calls;
  m.embed_cache_hits = embedder.stats().cache_hits - embed_hits;
  m.generation_calls = generator.stats().backend_calls - gen_calls;
  m.generation_cache_hits = generator.stats().cache_hits - gen_hits;
  m.generation_warnings = generator.stats().warnings - gen_warnings;
  return m;
}

void write_summary_csv(std::ostream& out, std::span<const MethodSummary> rows) {
  auto quoted = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q.push_back('"');
      q.push_back(c);
    }
    return q + "\"";
  };
  out << "method,mean_recall,ci_low,ci_high,mean_latency_ms,build_seconds,persisted_mb\n";
  out << std::setprecision(6) << std::fixed;
  for (const auto& r : rows) {
    out << quoted(r.method) << ',' << r.mean_recall << ',' << r.normal_ci.low << ','
        << r.normal_ci.high << ',' << r.mean_latency_ms << ',' << r.build_seconds << ','
        << r.persisted_mb() << '\n';
  }
}

}  // namespace chunkbench
