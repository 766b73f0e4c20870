#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "chunkbench/cli.h"
#include "chunkbench/hashing.h"
#include "chunkbench/index.h"
#include "chunkbench/text.h"

namespace chunkbench {

namespace fs = std::filesystem;

namespace {

struct Session {
  RunManifest manifest;
  fs::path manifest_path;
  Corpus corpus;
  std::unique_ptr<EmbeddingService> embedder;
  std::unique_ptr<GenerationService> generator;
};

Corpus read_corpus(const fs::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read corpus " + path.string());
  Corpus corpus = parse_corpus(in, format, path.stem().string());
  validate_corpus(corpus);
  return corpus;
}

Session open_session(const fs::path& manifest_path, const std::optional<std::string>& provider) {
  Session s;
  s.manifest_path = manifest_path;
  s.manifest = load_manifest(manifest_path);
  if (provider) {
    if (*provider != "mock") throw UsageError("--provider only accepts \"mock\"");
    s.manifest.embedding.kind = ProviderKind::mock;
    s.manifest.generation.kind = ProviderKind::mock;
  }
  s.manifest.validate();
  s.corpus = read_corpus(s.manifest.corpus, s.manifest.corpus_format);
  s.embedder = make_embedding_service(s.manifest.embedding);
  s.generator = make_generation_service(s.manifest.generation);
  return s;
}

std::vector<BaseUnit> ensure_propositions(Session& s) {
  const fs::path path = s.manifest.propositions_path();
  if (fs::exists(path)) return load_units(path);
  spdlog::info("propositionizing {} sections", s.corpus.sections.size());
  auto props = propositionize_corpus(s.corpus, *s.generator, s.manifest.workers);
  fs::create_directories(path.parent_path());
  save_units(path, props);
  return props;
}

fs::path build_record_path(const RunManifest& m, const StrategyConfig& c) {
  return m.index_dir() / (c.slug() + ".build.json");
}

fs::path runs_path(const RunManifest& m, const StrategyConfig& c, std::size_t k) {
  return m.runs_dir() / (c.slug() + ".k" + std::to_string(k) + ".jsonl");
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string build_hint(const Session& s, const StrategyConfig& c) {
  return "run `chunkbench build --manifest " + s.manifest_path.string() + " --tag \"" + c.tag() +
         "\"` first";
}

const StrategyConfig& resolve_baseline(const RunManifest& m, const std::string& name) {
  const std::string want = text::to_lower(name);
  for (const auto& c : m.strategies) {
    if (text::to_lower(c.tag()) == want || c.slug() == want) return c;
  }
  throw UsageError("baseline \"" + name + "\" is not among the manifest strategies");
}

std::string stamp_line(const nlohmann::ordered_json& stamp) {
  return "chunkbench seed=" + std::to_string(stamp["seed"].get<std::uint64_t>()) +
         " config_hash=" + stamp["config_hash"].get<std::string>() +
         " embedding=" + stamp["embedding"]["kind"].get<std::string>() + "/" +
         stamp["embedding"]["model"].get<std::string>() +
         " generation=" + stamp["generation"]["kind"].get<std::string>() + "/" +
         stamp["generation"]["model"].get<std::string>();
}

// ---------------------------------------------------------------------------
// corpus parse

int cmd_corpus_parse(const fs::path& input, const std::optional<std::string>& format,
                     const std::optional<fs::path>& output, std::ostream& out) {
  CorpusFormat fmt;
  try {
    if (format) {
      fmt = parse_corpus_format(*format);
    } else {
      fmt = input.extension() == ".json" ? CorpusFormat::canonical_json
                                         : CorpusFormat::plain_statute_text;
    }
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const Corpus corpus = read_corpus(input, fmt);
  const CorpusCounts counts = count_corpus(corpus);
  if (output) write_text(*output, render_canonical_json(corpus));
  out << "sections: " << counts.sections << "\nsubsections: " << counts.subsections
      << "\nsentences: " << counts.sentences << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// build

struct BuildOptions {
  std::vector<std::string> tags;
  std::optional<std::string> family;
  std::optional<std::string> unit;
  std::optional<std::size_t> window, overlap, clusters, budget, reduction;
};

std::vector<StrategyConfig> select_strategies(const RunManifest& m, const BuildOptions& o) {
  if (o.family) {
    nlohmann::json j{{"family", *o.family}};
    if (o.unit) j["unit"] = *o.unit;
    if (o.window) j["window"] = *o.window;
    if (o.overlap) j["overlap"] = *o.overlap;
    if (o.clusters) j["clusters"] = *o.clusters;
    if (o.budget) j["budget"] = *o.budget;
    if (o.reduction) j["reduction"] = *o.reduction;
    return {parse_strategy(j, m.seed)};
  }
  if (o.tags.empty()) return m.strategies;
  std::vector<StrategyConfig> picked;
  for (const auto& t : o.tags) {
    auto it = std::find_if(m.strategies.begin(), m.strategies.end(), [&](const auto& c) {
      return c.tag() == t || c.slug() == t;
    });
    if (it == m.strategies.end()) throw UsageError("no strategy tagged \"" + t + "\" in manifest");
    picked.push_back(*it);
  }
  return picked;
}

int cmd_build(Session& s, const BuildOptions& options, std::ostream& out) {
  const auto configs = select_strategies(s.manifest, options);
  std::vector<BaseUnit> props;
  const bool need_props = std::any_of(configs.begin(), configs.end(), [](const auto& c) {
    return c.family != Family::fixed && c.granularity == Granularity::proposition;
  });
  if (need_props) props = ensure_propositions(s);

  fs::create_directories(s.manifest.index_dir());
  for (const auto& config : configs) {
    spdlog::info("building {}", config.tag());
    BuildMeasurement m = measure_build(config, s.corpus, props, *s.embedder, *s.generator,
                                       s.manifest.index_dir(), s.manifest.workers);
    auto record = m.to_json();
    record["stamp"] = reproducibility_stamp(s.manifest);
    write_text(build_record_path(s.manifest, config), record.dump(2) + "\n");
    out << config.tag() << ": " << m.indexed_units << " indexed units from " << m.base_units
        << " base units, " << m.build_seconds << " s, " << m.persisted_bytes << " bytes -> "
        << m.index_path.string() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

void run_strategy_queries(Session& s, const StrategyConfig& config, const QADataset& data,
                          std::size_t k, const SectionOrder& order) {
  const fs::path index_path = s.manifest.index_dir() / (config.slug() + ".scix");
  if (!fs::exists(index_path) || !fs::exists(build_record_path(s.manifest, config))) {
    throw Error("no index for \"" + config.tag() + "\" at " + index_path.string() + "; " +
                build_hint(s, config));
  }
  RetrievalConfig rc = s.manifest.retrieval;
  rc.k_sections = k;

  std::optional<VectorIndex> flat;
  std::optional<RaptorIndex> tree;
  if (index_file_version(index_path) == kRaptorIndexVersion) {
    tree = load_raptor_index(index_path);
  } else {
    flat = load_index(index_path);
  }
  const IndexView view = tree ? IndexView(*tree) : IndexView(*flat);

  std::ostringstream lines;
  for (const auto& q : data.records) {
    const TimedRanking run =
        run_query(*s.embedder, q.query_id, q.question, view, rc, order, s.manifest.repetitions);
    auto record = run_record(run, config.tag());
    record["gold"] = q.gold_section_ids;
    record["recall"] = recall_at_k(run.ranking, q.gold_section_ids);
    lines << record.dump() << "\n";
  }
  write_text(runs_path(s.manifest, config, k), lines.str());
}

int cmd_eval(Session& s, std::size_t k, std::ostream& out) {
  for (const auto& c : s.manifest.strategies) {
    const fs::path index_path = s.manifest.index_dir() / (c.slug() + ".scix");
    if (!fs::exists(index_path)) {
      throw Error("no index for \"" + c.tag() + "\" at " + index_path.string() + "; " +
                  build_hint(s, c));
    }
  }
  const QADataset data = load_qa_dataset(s.manifest.dataset, &s.corpus);
  const SectionOrder order(s.corpus);
  for (const auto& c : s.manifest.strategies) {
    spdlog::info("evaluating {} on {} questions", c.tag(), data.records.size());
    run_strategy_queries(s, c, data, k, order);
  }
  out << "evaluated " << s.manifest.strategies.size() << " strategies on "
      << data.records.size() << " questions at k=" << k << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stats / report

struct Collected {
  EvalMatrix recall;
  EvalMatrix latency;
  std::vector<BuildMeasurement> builds;
};

Collected collect(const Session& s, std::size_t k) {
  const QADataset data = load_qa_dataset(s.manifest.dataset, &s.corpus);
  std::vector<std::string> questions, methods;
  for (const auto& q : data.records) questions.push_back(q.query_id);
  for (const auto& c : s.manifest.strategies) methods.push_back(c.tag());
  Collected out{EvalMatrix(questions, methods), EvalMatrix(questions, methods), {}};

  std::map<std::string, std::size_t> row_of;
  for (std::size_t q = 0; q < questions.size(); ++q) row_of[questions[q]] = q;

  for (std::size_t m = 0; m < s.manifest.strategies.size(); ++m) {
    const auto& c = s.manifest.strategies[m];
    const fs::path record_path = build_record_path(s.manifest, c);
    if (!fs::exists(record_path)) {
      throw Error("no build record for \"" + c.tag() + "\"; " + build_hint(s, c));
    }
    out.builds.push_back(BuildMeasurement::from_json(read_json(record_path)));

    const fs::path path = runs_path(s.manifest, c, k);
    std::ifstream in(path);
    if (!in) {
      throw Error("no evaluation runs for \"" + c.tag() + "\" at k=" + std::to_string(k) +
                  "; run `chunkbench eval --manifest " + s.manifest_path.string() +
                  " --k " + std::to_string(k) + "` first");
    }
    std::vector<bool> seen(questions.size(), false);
    std::string line;
    while (std::getline(in, line)) {
      if (text::trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line);
      auto it = row_of.find(j.at("query_id").get<std::string>());
      if (it == row_of.end()) continue;
      double latency = 0.0;
      const auto& lat = j.at("latency_ms");
      for (const auto& v : lat) latency += v.get<double>();
      if (!lat.empty()) latency /= static_cast<double>(lat.size());
      out.recall.at(it->second, m) = j.at("recall").get<double>();
      out.latency.at(it->second, m) = latency;
      seen[it->second] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw DataError(path.string() + " does not cover every question; rerun eval");
    }
  }
  return out;
}

std::vector<MethodSummary> summarize(const Session& s, const Collected& c) {
  std::vector<MethodSummary> rows;
  for (std::size_t m = 0; m < c.recall.cols(); ++m) {
    const auto recall = c.recall.column(m);
    const auto latency = c.latency.column(m);
    MethodSummary r;
    r.method = c.recall.method_tags[m];
    r.mean_recall = mean(recall);
    r.normal_ci = normal_ci(recall, s.manifest.stats.level);
    if (recall.size() >= 2) {
      r.bootstrap_ci =
          paired_bootstrap_ci(recall, s.manifest.stats.bootstrap_draws,
                              derive_seed(s.manifest.seed, "bootstrap-mean/" + r.method),
                              s.manifest.stats.level);
    } else {
      r.bootstrap_ci = {r.mean_recall, r.mean_recall};
    }
    r.mean_latency_ms = mean(latency);
    r.build_seconds = c.builds[m].build_seconds;
    r.persisted_bytes = c.builds[m].persisted_bytes;
    rows.push_back(std::move(r));
  }
  return rows;
}

int write_reports(const Session& s, std::size_t k, const std::optional<std::string>& baseline,
                  std::ostream& out, bool stats_only) {
  StatsConfig stats = s.manifest.stats;
  stats.baseline = resolve_baseline(s.manifest, baseline.value_or(stats.baseline)).tag();

  const Collected c = collect(s, k);
  const StatsReport recall_stats =
      compare_methods(c.recall, stats, "recall@" + std::to_string(k));
  StatsConfig latency_config = stats;
  latency_config.seed = derive_seed(stats.seed, "latency");
  const StatsReport latency_stats = compare_methods(c.latency, latency_config, "latency_ms");
  const auto stamp = reproducibility_stamp(s.manifest);
  const std::string suffix = "_k" + std::to_string(k);

  nlohmann::ordered_json stats_json{{"stamp", stamp},
                                    {"k_sections", k},
                                    {"baseline", stats.baseline},
                                    {"recall", to_json(recall_stats)},
                                    {"latency", to_json(latency_stats)}};
  write_text(s.manifest.reports_dir() / ("stats" + suffix + ".json"), stats_json.dump(2) + "\n");

  if (recall_stats.friedman) {
    out << "Friedman chi2=" << recall_stats.friedman->statistic
        << " df=" << recall_stats.friedman->df << " p=" << recall_stats.friedman->p_value << "\n";
  }
  for (const auto& cmp : recall_stats.comparisons) {
    out << cmp.method << " vs " << cmp.baseline << ": diff=" << cmp.mean_difference
        << " p=" << cmp.p_raw << " p_holm=" << cmp.p_holm << "\n";
  }
  if (stats_only) return kExitOk;

  const auto rows = summarize(s, c);
  std::ostringstream csv;
  csv << "# " << stamp_line(stamp) << "\n";
  write_summary_csv(csv, rows);
  write_text(s.manifest.reports_dir() / ("report" + suffix + ".csv"), csv.str());

  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    methods.push_back({{"method", r.method},
                       {"mean_recall", r.mean_recall},
                       {"normal_ci", {r.normal_ci.low, r.normal_ci.high}},
                       {"bootstrap_ci", {r.bootstrap_ci.low, r.bootstrap_ci.high}},
                       {"mean_latency_ms", r.mean_latency_ms},
                       {"build_seconds", r.build_seconds},
                       {"persisted_bytes", r.persisted_bytes},
                       {"persisted_mb", r.persisted_mb()}});
  }
  nlohmann::ordered_json per_question{{"question_ids", c.recall.question_ids}};
  for (std::size_t m = 0; m < c.recall.cols(); ++m) {
    per_question["recall"][c.recall.method_tags[m]] = c.recall.column(m);
    per_question["latency_ms"][c.recall.method_tags[m]] = c.latency.column(m);
  }
  nlohmann::ordered_json report{
      {"stamp", stamp},
      {"k_sections", k},
      {"k_units", s.manifest.retrieval.k_units},
      {"aggregation", to_string(s.manifest.retrieval.aggregation)},
      {"questions", c.recall.rows()},
      {"metadata",
       {{"csv_ci", "normal theory, mean +- z*sd/sqrt(n)"},
        {"bootstrap_ci", "percentile, resampling questions"},
        {"confidence_level", stats.level},
        {"permutation_draws", stats.permutation_draws},
        {"bootstrap_draws", stats.bootstrap_draws},
        {"exhaustive_permutation_limit", kExhaustivePermutationLimit},
        {"latency_tests_use_recall_draws", true},
        {"latency", "mean over timed repetitions, query embedding excluded"}}},
      {"methods", std::move(methods)},
      {"tests", {{"recall", to_json(recall_stats)}, {"latency", to_json(latency_stats)}}},
      {"per_question", std::move(per_question)}};
  write_text(s.manifest.reports_dir() / ("report" + suffix + ".json"), report.dump(2) + "\n");

  const std::string comment = "<!-- " + stamp_line(stamp) + " -->\n";
  auto chart = [&](const std::string& name, const std::string& title, const std::string& axis,
                   auto value, bool with_ci) {
    BarSeries series;
    for (const auto& r : rows) {
      series.labels.push_back(r.method);
      series.values.push_back(value(r));
      if (with_ci) series.errors.push_back(r.normal_ci);
    }
    write_text(s.manifest.reports_dir() / (name + ".svg"),
               comment + render_bar_chart(title, axis, series));
  };
  chart("recall" + suffix, "Mean Recall@" + std::to_string(k), "recall",
        [](const MethodSummary& r) { return r.mean_recall; }, true);
  chart("latency" + suffix, "Mean retrieval latency", "milliseconds",
        [](const MethodSummary& r) { return r.mean_latency_ms; }, false);
  chart("build_time", "Offline build time", "seconds",
        [](const MethodSummary& r) { return r.build_seconds; }, false);
  chart("index_size", "Persisted index size", "MB",
        [](const MethodSummary& r) { return r.persisted_mb(); }, false);

  out << "reports written to " << s.manifest.reports_dir().string() << "\n";
  return kExitOk;
}

void setup_logging(const std::string& level) {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("chunkbench-cli");
    spdlog::set_default_logger(l);
    return l;
  }();
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && level != "off") {
    throw UsageError("unknown log level \"" + level + "\"");
  }
  logger->set_level(parsed);
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chunking strategy benchmark for statutory retrieval"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  std::string log_level = "info";
  std::optional<std::string> provider;
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");
  app.add_option("--provider", provider, "\"mock\" forces offline embedding and generation");

  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus utilities");
  corpus_cmd->require_subcommand(1);
  auto* parse_cmd = corpus_cmd->add_subcommand("parse", "Parse a corpus into canonical JSON");
  fs::path input;
  std::optional<fs::path> output;
  std::optional<std::string> format;
  parse_cmd->add_option("input", input, "Corpus file")->required();
  parse_cmd->add_option("-o,--output", output, "Canonical JSON output path");
  parse_cmd->add_option("--format", format, "plain-statute-text or canonical-json (default: by extension)");

  fs::path manifest_path;
  std::optional<std::size_t> workers;
  auto add_manifest = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path, "Run manifest (JSON)")->required();
  };

  auto* build_cmd = app.add_subcommand("build", "Build and persist strategy indexes");
  add_manifest(build_cmd);
  BuildOptions build;
  build_cmd->add_option("--tag", build.tags, "Manifest strategy tag or slug (repeatable)");
  build_cmd->add_option("--strategy", build.family,
                        "Ad-hoc strategy family: flat, fixed, contextual, semantic, lumber, raptor");
  build_cmd->add_option("--unit", build.unit, "section, subsection, sentence or proposition");
  build_cmd->add_option("--window", build.window, "Fixed window size in tokens");
  build_cmd->add_option("--overlap", build.overlap, "Fixed window overlap in tokens");
  build_cmd->add_option("--clusters", build.clusters, "Semantic cluster count");
  build_cmd->add_option("--budget", build.budget, "Lumber token budget");
  build_cmd->add_option("--reduction", build.reduction, "RAPTOR reduction factor");
  build_cmd->add_option("--workers", workers, "Parallel provider workers");

  std::size_t k = 10;
  std::optional<std::string> baseline;
  auto* eval_cmd = app.add_subcommand("eval", "Run all queries, then write stats and reports");
  auto* stats_cmd = app.add_subcommand("stats", "Significance tests from stored runs");
  auto* report_cmd = app.add_subcommand("report", "CSV, JSON and SVG reports from stored runs");
  for (auto* cmd : {eval_cmd, stats_cmd, report_cmd}) {
    add_manifest(cmd);
    cmd->add_option("--k", k, "Distinct sections per query")->check(CLI::PositiveNumber);
    cmd->add_option("--baseline", baseline, "Baseline strategy tag or slug");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    setup_logging(log_level);
    if (*parse_cmd) return cmd_corpus_parse(input, format, output, out);

    Session s = open_session(manifest_path, provider);
    if (workers) s.manifest.workers = std::max<std::size_t>(1, *workers);
    if (*build_cmd) return cmd_build(s, build, out);
    if (*eval_cmd) {
      if (baseline) resolve_baseline(s.manifest, *baseline);
      cmd_eval(s, k, out);
      return write_reports(s, k, baseline, out, false);
    }
    if (*stats_cmd) return write_reports(s, k, baseline, out, true);
    if (*report_cmd) return write_reports(s, k, baseline, out, false);
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace chunkbench
