#include <fstream>
#include <set>

#include "chunkbench/cli.h"
#include "chunkbench/hashing.h"

namespace chunkbench {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

ProviderConfig parse_provider(const nlohmann::json& j, const fs::path& base,
                              const fs::path& output_dir, std::uint64_t seed,
                              std::string_view stage) {
  ProviderConfig c;
  c.seed = derive_seed(seed, stage);
  c.cache_dir = output_dir / "cache";
  if (j.is_null()) return c;
  if (j.contains("kind")) c.kind = parse_provider_kind(j.at("kind").get<std::string>());
  if (j.contains("endpoint")) c.endpoint = j.at("endpoint").get<std::string>();
  if (j.contains("model")) c.model_name = j.at("model").get<std::string>();
  if (j.contains("cache_dir")) c.cache_dir = resolve(base, j.at("cache_dir").get<std::string>());
  if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("dim")) c.dim = j.at("dim").get<std::size_t>();
  if (j.contains("backoff_ms")) c.backoff_ms = j.at("backoff_ms").get<int>();
  if (j.contains("timeout_seconds")) c.timeout_seconds = j.at("timeout_seconds").get<int>();
  if (j.contains("api_key_env")) c.api_key_env = j.at("api_key_env").get<std::string>();
  if (j.contains("adapter")) {
    const auto& a = j.at("adapter");
    c.adapter.embeddings_pointer = a.value("embeddings_pointer", c.adapter.embeddings_pointer);
    c.adapter.embedding_field = a.value("embedding_field", c.adapter.embedding_field);
    c.adapter.text_pointer = a.value("text_pointer", c.adapter.text_pointer);
  }
  return c;
}

nlohmann::ordered_json provider_json(const ProviderConfig& c) {
  nlohmann::ordered_json j{{"kind", to_string(c.kind)},
                           {"model", c.model_name},
                           {"max_retries", c.max_retries},
                           {"batch_size", c.batch_size},
                           {"dim", c.dim}};
  j["endpoint"] = c.endpoint ? nlohmann::ordered_json(*c.endpoint) : nlohmann::ordered_json();
  return j;
}

nlohmann::ordered_json strategy_json(const StrategyConfig& s) {
  nlohmann::ordered_json j{{"family", to_string(s.family)}, {"tag", s.tag()}};
  if (s.family != Family::fixed) j["unit"] = to_string(s.granularity);
  if (s.window_tokens) j["window"] = *s.window_tokens;
  if (s.overlap_tokens) j["overlap"] = *s.overlap_tokens;
  if (s.cluster_count) j["clusters"] = *s.cluster_count;
  if (s.family == Family::lumber) j["budget"] = s.lumber_budget();
  if (s.family == Family::raptor) j["reduction"] = s.reduction();
  return j;
}

}  // namespace

StrategyConfig parse_strategy(const nlohmann::json& j, std::uint64_t seed) {
  try {
    StrategyConfig s;
    s.seed = seed;
    s.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("unit")) s.granularity = parse_granularity(j.at("unit").get<std::string>());
    if (j.contains("window")) s.window_tokens = j.at("window").get<std::size_t>();
    if (j.contains("overlap")) s.overlap_tokens = j.at("overlap").get<std::size_t>();
    if (j.contains("clusters")) s.cluster_count = j.at("clusters").get<std::size_t>();
    if (j.contains("budget")) s.lumber_budget_tokens = j.at("budget").get<std::size_t>();
    if (j.contains("reduction")) s.raptor_reduction = j.at("reduction").get<std::size_t>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad strategy ") + j.dump() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw UsageError(std::string("bad strategy ") + j.dump() + ": " + e.what());
  }
}

RunManifest RunManifest::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  RunManifest m;
  try {
    m.corpus = resolve(base_dir, j.at("corpus").get<std::string>());
    if (j.contains("corpus_format")) {
      m.corpus_format = parse_corpus_format(j.at("corpus_format").get<std::string>());
    }
    m.dataset = resolve(base_dir, j.at("dataset").get<std::string>());
    m.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    m.seed = j.value("seed", std::uint64_t{0});
    m.workers = j.value("workers", std::size_t{1});
    m.embedding = parse_provider(j.value("embedding", nlohmann::json()), base_dir, m.output_dir,
                                 m.seed, "embedding");
    m.generation = parse_provider(j.value("generation", nlohmann::json()), base_dir,
                                  m.output_dir, m.seed, "generation");

    const auto strategies = j.value("strategies", nlohmann::json("default"));
    if (strategies.is_string()) {
      if (strategies.get<std::string>() != "default") {
        throw UsageError("\"strategies\" must be \"default\" or a list");
      }
      m.strategies = default_strategy_suite(m.seed);
    } else {
      for (const auto& s : strategies) m.strategies.push_back(parse_strategy(s, m.seed));
    }

    if (j.contains("retrieval")) {
      const auto& r = j.at("retrieval");
      m.retrieval.k_units = r.value("k_units", m.retrieval.k_units);
      m.retrieval.k_sections = r.value("k_sections", m.retrieval.k_sections);
      m.retrieval.beam = r.value("beam", m.retrieval.beam);
      if (r.contains("aggregation")) {
        m.retrieval.aggregation = parse_aggregation(r.at("aggregation").get<std::string>());
      }
      m.repetitions = r.value("repetitions", m.repetitions);
    }
    m.stats.seed = m.seed;
    if (j.contains("stats")) {
      const auto& s = j.at("stats");
      m.stats.baseline = s.value("baseline", m.stats.baseline);
      m.stats.permutation_draws = s.value("permutation_draws", m.stats.permutation_draws);
      m.stats.bootstrap_draws = s.value("bootstrap_draws", m.stats.bootstrap_draws);
      m.stats.level = s.value("level", m.stats.level);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw UsageError(std::string("bad manifest: ") + e.what());
  }
  return m;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json strategies_json = nlohmann::ordered_json::array();
  for (const auto& s : strategies) strategies_json.push_back(strategy_json(s));
  return {{"corpus", corpus.string()},
          {"corpus_format", corpus_format == CorpusFormat::canonical_json ? "canonical-json"
                                                                         : "plain-statute-text"},
          {"dataset", dataset.string()},
          {"output_dir", output_dir.string()},
          {"seed", seed},
          {"embedding", provider_json(embedding)},
          {"generation", provider_json(generation)},
          {"strategies", std::move(strategies_json)},
          {"retrieval",
           {{"k_units", retrieval.k_units},
            {"k_sections", retrieval.k_sections},
            {"aggregation", to_string(retrieval.aggregation)},
            {"beam", retrieval.beam},
            {"repetitions", repetitions}}},
          {"stats",
           {{"baseline", stats.baseline},
            {"permutation_draws", stats.permutation_draws},
            {"bootstrap_draws", stats.bootstrap_draws},
            {"level", stats.level}}}};
}

void RunManifest::validate(bool check_paths) const {
  if (strategies.empty()) throw UsageError("manifest lists no strategies");
  std::set<std::string> tags;
  for (const auto& s : strategies) {
    try {
      s.validate();
    } catch (const ConfigError& e) {
      throw UsageError(s.tag() + ": " + e.what());
    }
    if (!tags.insert(s.tag()).second) throw UsageError("duplicate strategy tag " + s.tag());
  }
  for (const auto* p : {&embedding, &generation}) {
    try {
      p->validate();
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (retrieval.k_units == 0 || retrieval.k_sections == 0 || retrieval.beam == 0) {
    throw UsageError("k_units, k_sections and beam must be >= 1");
  }
  if (repetitions == 0) throw UsageError("repetitions must be >= 1");
  if (check_paths) {
    if (!fs::exists(corpus)) throw UsageError("corpus file not found: " + corpus.string());
    if (!fs::exists(dataset)) throw UsageError("dataset file not found: " + dataset.string());
  }
}

std::string RunManifest::config_hash() const { return sha256_hex(to_json().dump()); }

RunManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return RunManifest::from_json(j, fs::absolute(path).parent_path());
}

nlohmann::ordered_json reproducibility_stamp(const RunManifest& m) {
  return {{"tool", "chunkbench"},
          {"seed", m.seed},
          {"config_hash", m.config_hash()},
          {"embedding", {{"kind", to_string(m.embedding.kind)},
                         {"model", m.embedding.model_name},
                         {"seed", m.embedding.seed}}},
          {"generation", {{"kind", to_string(m.generation.kind)},
                          {"model", m.generation.model_name}}},
          {"aggregation", to_string(m.retrieval.aggregation)},
          {"k_units", m.retrieval.k_units},
          {"beam", m.retrieval.beam},
          {"repetitions", m.repetitions},
          {"permutation_draws", m.stats.permutation_draws},
          {"bootstrap_draws", m.stats.bootstrap_draws}};
}

}  // namespace chunkbench
