#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chunkbench/cache.h"
#include "chunkbench/corpus.h"

namespace chunkbench {

/// Dense embedding. Vectors returned by EmbeddingService are unit-normalized.
struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

double dot(std::span<const float> a, std::span<const float> b);
double dot(const EmbeddingVector& a, const EmbeddingVector& b);
double l2_norm(std::span<const float> v);

/// Scales `v` to unit length. Returns false (and leaves `v` unchanged) for a
/// zero vector.
bool normalize_in_place(std::vector<float>& v);

enum class ProviderKind { remote, mock };

std::string_view to_string(ProviderKind k);
ProviderKind parse_provider_kind(std::string_view name);

/// Where a remote response keeps its payload. Pointers use JSON Pointer
/// syntax; `embedding_field` is read from each element of the embeddings
/// array when non-empty ({"data": [{"embedding": [...]}, ...]}).
struct ResponseAdapter {
  std::string embeddings_pointer = "/embeddings";
  std::string embedding_field;
  std::string text_pointer = "/text";
};

struct ProviderConfig {
  ProviderKind kind = ProviderKind::mock;
  std::optional<std::string> endpoint;
  std::string model_name = "mock";
  std::filesystem::path cache_dir;  // empty: in-memory cache only
  int max_retries = 5;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::size_t dim = 256;  // 0 lets a remote embedder decide
  int backoff_ms = 200;   // first retry delay, doubled per attempt
  int timeout_seconds = 60;
  std::string api_key_env;  // EMBED_API_KEY / LLM_API_KEY when empty
  ResponseAdapter adapter;

  /// Throws ConfigError when the kind-specific requirements do not hold.
  void validate() const;
};

/// Counters shared by both services. Backend calls are real provider
/// invocations (one per batch for embeddings).
struct ProviderStats {
  std::atomic<std::size_t> backend_calls{0};
  std::atomic<std::size_t> cache_hits{0};
  std::atomic<std::size_t> cache_misses{0};
  std::atomic<std::size_t> warnings{0};
  std::atomic<std::size_t> stored{0};  // results written to the cache
};

// ---------------------------------------------------------------------------
// Embeddings

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string model_name() const = 0;
  /// One provider round trip. Vectors need not be normalized.
  virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) = 0;
};

/// Signed feature hashing over lowercase word tokens.
class MockEmbeddingBackend : public EmbeddingBackend {
 public:
  MockEmbeddingBackend(std::size_t dim, std::uint64_t seed);

  std::string model_name() const override;
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

  std::vector<float> embed_one(std::string_view text) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Lowercase word tokens as used by the mock embedder.
std::vector<std::string> hashing_tokens(std::string_view text);

/// Batching, caching, retry and normalization in front of a backend.
/// Thread-safe.
class EmbeddingService {
 public:
  EmbeddingService(ProviderConfig config, std::unique_ptr<EmbeddingBackend> backend);

  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);
  EmbeddingVector embed(std::string_view text);

  const ProviderConfig& config() const { return config_; }
  const ProviderStats& stats() const { return stats_; }
  /// Dimension of returned vectors; 0 until a remote provider answered once.
  std::size_t dim() const { return dim_.load(); }

 private:
  std::vector<float> check_dim(std::vector<float> v);

  ProviderConfig config_;
  std::unique_ptr<EmbeddingBackend> backend_;
  ResultCache cache_;
  ProviderStats stats_;
  std::atomic<std::size_t> dim_;
};

std::unique_ptr<EmbeddingService> make_embedding_service(const ProviderConfig& config);

// ---------------------------------------------------------------------------
// Generation

/// One unit of a Lumber group as seen by the boundary predictor.
struct LumberUnit {
  std::string text;
  std::string parent_section_id;
};

/// Raw text generation for the four preprocessing tasks. Answers are
/// unparsed model output; GenerationService interprets them.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string model_name() const = 0;
  /// One proposition per line.
  virtual std::string propositions(std::string_view unit_text,
                                   const SectionContext& context) = 0;
  virtual std::string context_prefix(std::string_view unit_text,
                                     const SectionContext& context) = 0;
  /// 1-based index of the first unit of the next chunk.
  virtual std::string lumber_boundary(std::span<const LumberUnit> group,
                                      std::size_t budget_tokens) = 0;
  virtual std::string summary(std::span<const std::string> texts) = 0;
};

/// Deterministic rule-based stand-in for an LLM:
///  - propositions: split on ';', on ", and " / ", und ", and on " and to "
///    with the text up to the first " to " repeated as shared prefix;
///  - context prefix: hierarchy labels and heading joined by ": ";
///  - Lumber boundary: first unit that starts a new section once at least
///    half the budget is consumed, otherwise group length + 1;
///  - summary: first sentence of every text, concatenated.
class MockGenerationBackend : public GenerationBackend {
 public:
  std::string model_name() const override { return "mock-generator"; }
  std::string propositions(std::string_view unit_text,
                           const SectionContext& context) override;
  std::string context_prefix(std::string_view unit_text,
                             const SectionContext& context) override;
  std::string lumber_boundary(std::span<const LumberUnit> group,
                              std::size_t budget_tokens) override;
  std::string summary(std::span<const std::string> texts) override;
};

/// Prompt texts for remote generation. Placeholders: {unit}, {context},
/// {units}, {budget}, {texts}.
struct PromptTemplates {
  std::string propositions =
      "Split the following legal text into self-contained statements that can "
      "each be understood without the others. Answer with one statement per "
      "line and nothing else. If the text cannot be split, repeat it "
      "unchanged.\n\nContext:\n{context}\n\nText:\n{unit}";
  std::string context_prefix =
      "Here is a statutory section with its position in the code:\n{context}\n\n"
      "Write one short sentence that situates the following unit within the "
      "section and the surrounding law, for use as a retrieval prefix. Answer "
      "with the sentence only.\n\nUnit:\n{unit}";
  std::string lumber_boundary =
      "The numbered units below form a consecutive stream of statutory text "
      "(at most {budget} tokens). Give the number of the first unit where the "
      "content clearly moves to a new topic, so that the next chunk starts "
      "there. Answer with the number only.\n\n{units}";
  std::string summary =
      "Summarize the following statutory provisions in a few sentences, keeping "
      "their legal conditions and consequences.\n\n{texts}";
};

struct GenerationOutcome {
  std::string text;
  bool cache_hit = false;
};

/// Caching, retry and output interpretation in front of a generation
/// backend. Thread-safe.
class GenerationService {
 public:
  static constexpr std::size_t kPrefixTokenCap = 64;
  static constexpr std::size_t kSummaryTokenCap = 256;

  GenerationService(ProviderConfig config, std::unique_ptr<GenerationBackend> backend);

  /// Unit must be a sentence or subsection. Returns the unit text unchanged
  /// when the model produces nothing usable.
  std::vector<std::string> propositionize(const BaseUnit& unit,
                                          const SectionContext& context);
  std::string contextual_prefix(const BaseUnit& unit, const SectionContext& context);
  /// 1-based split index into `units`; units.size() + 1 keeps the group.
  std::size_t lumber_split(std::span<const BaseUnit> units, std::size_t budget_tokens);
  std::string summarize_cluster(std::span<const std::string> texts);

  const ProviderConfig& config() const { return config_; }
  const ProviderStats& stats() const { return stats_; }

 private:
  template <class Fn>
  std::string cached(std::string_view operation, std::string_view input, Fn&& call);

  ProviderConfig config_;
  std::unique_ptr<GenerationBackend> backend_;
  ResultCache cache_;
  ProviderStats stats_;
};

std::unique_ptr<GenerationService> make_generation_service(
    const ProviderConfig& config, const PromptTemplates& prompts = {});

/// Parses a model answer into propositions: one per non-empty line, list
/// bullets and numbering stripped.
std::vector<std::string> parse_proposition_lines(std::string_view answer);

/// First integer in the answer, if any.
std::optional<long long> parse_first_integer(std::string_view answer);

}  // namespace chunkbench
