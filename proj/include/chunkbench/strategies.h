#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chunkbench/corpus.h"
#include "chunkbench/providers.h"

namespace chunkbench {

enum class Family { flat, fixed, contextual, semantic, lumber, raptor };

std::string_view to_string(Family f);
/// Throws ConfigError on unknown names.
Family parse_family(std::string_view name);

struct StrategyConfig {
  Family family = Family::flat;
  Granularity granularity = Granularity::subsection;
  std::optional<std::size_t> window_tokens;
  std::optional<std::size_t> overlap_tokens;
  std::optional<std::size_t> cluster_count;  // semantic; scaled default when absent
  std::optional<std::size_t> lumber_budget_tokens;
  std::optional<std::size_t> raptor_reduction;
  std::uint64_t seed = 0;

  static constexpr std::size_t kDefaultLumberBudget = 512;
  static constexpr std::size_t kDefaultRaptorReduction = 4;
  static constexpr std::size_t kMaxClusterCount = 1000;

  /// Throws ConfigError for invalid parameter combinations.
  void validate() const;

  /// Display tag: "Subsection", "Fixed 256 / 64", "Lumber Proposition", ...
  std::string tag() const;
  /// File-name form of the tag: "subsection", "fixed-256-64", ...
  std::string slug() const;

  std::size_t lumber_budget() const { return lumber_budget_tokens.value_or(kDefaultLumberBudget); }
  std::size_t reduction() const { return raptor_reduction.value_or(kDefaultRaptorReduction); }
  /// Explicit cluster_count, else min(1000, max(1, round(unit_count / 24))).
  std::size_t clusters_for(std::size_t unit_count) const;
};

/// The 21 benchmark variants: 4 structural, 5 fixed-size windows
/// (256/64, 128/32, 64/16, 32/8, 16/4), and contextual, semantic, Lumber
/// and RAPTOR at subsection, sentence and proposition granularity.
std::vector<StrategyConfig> default_strategy_suite(std::uint64_t seed);

/// One embedded retrieval key. `member_units` indexes the base-unit list the
/// builder was given (empty for fixed windows, which use `token_begin` and
/// `token_end` into the corpus token stream instead).
struct IndexedUnit {
  std::string chunk_id;
  EmbeddingVector vector;
  std::vector<std::string> parent_section_ids;  // corpus order
  std::string embedded_text;
  std::string strategy_tag;
  std::vector<std::size_t> member_units;
  std::size_t token_begin = 0;
  std::size_t token_end = 0;
};

// ---------------------------------------------------------------------------
// Base units

/// Base units for a granularity. Proposition units come from `propositions`
/// (see propositionize_corpus); the other granularities from the corpus.
std::vector<BaseUnit> base_units(const Corpus& corpus, Granularity granularity,
                                 std::span<const BaseUnit> propositions = {});

/// Decomposes every sentence of the corpus into propositions. Unit ids are
/// "<section>:prop:<sentence>.<n>"; a sentence that cannot be split yields
/// one proposition equal to the sentence.
std::vector<BaseUnit> propositionize_corpus(const Corpus& corpus, GenerationService& generator,
                                            std::size_t workers = 1);

void save_units(const std::filesystem::path& path, std::span<const BaseUnit> units);
std::vector<BaseUnit> load_units(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Fixed-size token stream

/// The whole corpus as one whitespace-token stream: per section, per
/// subsection, the marker "(n)" followed by the sentence tokens.
struct TokenStream {
  std::vector<std::string> tokens;
  std::vector<std::uint32_t> section_of;  // index into corpus.sections, per token
};

TokenStream render_token_stream(const Corpus& corpus);

/// ceil(max(T - O, 1) / (W - O)).
std::size_t fixed_window_count(std::size_t total_tokens, std::size_t window,
                               std::size_t overlap);

// ---------------------------------------------------------------------------
// Builders

std::vector<IndexedUnit> build_flat(std::span<const BaseUnit> units, EmbeddingService& embedder,
                                    const std::string& strategy_tag);

std::vector<IndexedUnit> build_fixed(const Corpus& corpus, std::size_t window_tokens,
                                     std::size_t overlap_tokens, EmbeddingService& embedder);

/// "Additional context: <prefix>\n<Label>: <text>", or "<Label>: <text>"
/// when the prefix is empty.
std::string contextual_embedded_text(std::string_view prefix, Granularity granularity,
                                     std::string_view unit_text);

std::vector<IndexedUnit> build_contextual(std::span<const BaseUnit> units, const Corpus& corpus,
                                          GenerationService& generator,
                                          EmbeddingService& embedder, std::size_t workers = 1);

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<EmbeddingVector> centroids;  // unit length
  double inertia = 0.0;                    // sum of squared distances
  int iterations = 0;
};

/// Spherical Lloyd iterations from a seeded k-means++ start. Stops when no
/// centroid moves by 1e-4 or more, or after 100 iterations. Empty clusters
/// take the point farthest from its centroid. Throws ConfigError unless
/// 1 <= k <= vectors.size().
KMeansResult kmeans(std::span<const EmbeddingVector> vectors, std::size_t k,
                    std::uint64_t seed);

std::vector<IndexedUnit> build_semantic(std::span<const BaseUnit> units, const Corpus& corpus,
                                        EmbeddingService& embedder, std::size_t k,
                                        std::uint64_t seed);

std::vector<IndexedUnit> build_lumber(std::span<const BaseUnit> units, const Corpus& corpus,
                                      std::size_t budget_tokens, GenerationService& generator,
                                      EmbeddingService& embedder);

struct RaptorNode {
  std::string node_id;
  int level = 0;
  EmbeddingVector vector;
  std::vector<std::size_t> children;  // indices into RaptorTree::nodes
  std::optional<std::size_t> leaf_unit;  // index into the base-unit list
  std::string summary_text;
  std::vector<std::string> parent_section_ids;
};

/// Nodes are stored level by level, leaves first, so the leaf of base unit
/// i is node i. level_offsets has one entry per level plus the end.
struct RaptorTree {
  std::vector<RaptorNode> nodes;
  std::vector<std::size_t> level_offsets;

  std::size_t level_count() const { return level_offsets.empty() ? 0 : level_offsets.size() - 1; }
  std::size_t level_size(std::size_t level) const {
    return level_offsets[level + 1] - level_offsets[level];
  }
};

RaptorTree build_raptor(std::span<const BaseUnit> units, EmbeddingService& embedder,
                        GenerationService& generator, std::size_t reduction,
                        std::uint64_t seed, std::size_t workers = 1);

/// Leaf nodes of a tree as indexed units.
std::vector<IndexedUnit> raptor_leaves(const RaptorTree& tree, std::span<const BaseUnit> units,
                                       const std::string& strategy_tag);

// ---------------------------------------------------------------------------
// Dispatch and persistence

struct BuildOutput {
  std::string strategy_tag;
  std::vector<BaseUnit> units;  // base units the build consumed (empty for fixed)
  std::vector<IndexedUnit> indexed;
  std::optional<RaptorTree> tree;
};

/// Runs the builder for `config`. `propositions` must be supplied for
/// proposition granularity.
BuildOutput build_strategy(const StrategyConfig& config, const Corpus& corpus,
                           std::span<const BaseUnit> propositions, EmbeddingService& embedder,
                           GenerationService& generator, std::size_t workers = 1);

/// One JSON object per indexed unit: chunk_id, strategy_tag,
/// parent_section_ids, embedded_text_sha256, token_count.
void write_chunk_manifest(const std::filesystem::path& path,
                          std::span<const IndexedUnit> units);

/// Parent sections of the given base units, deduplicated, corpus-ordered.
std::vector<std::string> ordered_parents(std::span<const BaseUnit> units,
                                         std::span<const std::size_t> members,
                                         const SectionOrder& order);

}  // namespace chunkbench
