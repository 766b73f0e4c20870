#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "chunkbench/corpus.h"
#include "chunkbench/evalstat.h"
#include "chunkbench/index.h"
#include "chunkbench/providers.h"

namespace chunkbench::testing {

/// Plain description of a section: one inner vector of sentences per
/// subsection.
struct SectionSpec {
  std::string id;
  std::string heading;
  std::vector<std::vector<std::string>> subsections;
};

struct CorpusSpec {
  HierarchyPath hierarchy;
  std::vector<SectionSpec> sections;
};

/// Builds the Corpus value directly from the spec, without any parsing.
Corpus build_corpus(const CorpusSpec& spec, const std::string& name = "fixture");
/// Renders the spec as plain statute text ("§ id heading", "(n) ..." lines).
std::string render_plain(const CorpusSpec& spec);

CorpusSpec lease_spec();              // § 535
CorpusSpec minors_lumber_spec();      // §§ 111-113
CorpusSpec sale_spec();               // § 433
CorpusSpec penalty_spec();            // §§ 339-341
CorpusSpec minors_consent_spec();     // §§ 107, 108, 111

struct SyntheticCorpus {
  CorpusSpec spec;
  Corpus corpus;
  std::vector<std::vector<std::string>> keywords;  // per section
};

/// Random sections of 1-3 subsections with 1-3 sentences each. Every
/// sentence mixes shared filler words with keywords unique to its section.
SyntheticCorpus make_synthetic_corpus(std::size_t sections, std::uint64_t seed);

/// Questions built from the keywords of one or two gold sections.
std::vector<QARecord> make_planted_queries(const SyntheticCorpus& corpus, std::size_t count,
                                           std::uint64_t seed);

std::vector<std::vector<float>> random_unit_vectors(std::size_t n, std::size_t dim,
                                                    std::uint64_t seed);

/// Finalized index over the vectors; row i gets chunk id "u<i>" and the
/// given parent, or "s<i>" when none.
VectorIndex index_from_vectors(const std::vector<std::vector<float>>& vectors,
                               const std::vector<std::string>& parents = {});

ProviderConfig mock_config(std::size_t dim = 256, std::uint64_t seed = 0);
std::unique_ptr<EmbeddingService> mock_embedder(std::size_t dim = 256, std::uint64_t seed = 0);
std::unique_ptr<GenerationService> mock_generator();

/// Mock generator whose Lumber answers come from a queue first.
class ScriptedGeneration : public MockGenerationBackend {
 public:
  explicit ScriptedGeneration(std::deque<std::string> lumber_answers = {})
      : lumber_answers_(std::move(lumber_answers)) {}

  std::string model_name() const override { return "scripted-generator"; }
  std::string lumber_boundary(std::span<const LumberUnit> group,
                              std::size_t budget_tokens) override;

  std::vector<std::size_t> group_sizes() const;

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> lumber_answers_;
  std::vector<std::size_t> group_sizes_;
};

/// Mock embeddings that fail the first `failures` calls and count calls.
class FlakyEmbedding : public EmbeddingBackend {
 public:
  FlakyEmbedding(std::size_t dim, int failures) : inner_(dim, 0), failures_(failures) {}

  std::string model_name() const override { return "flaky"; }
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

  int calls() const { return calls_.load(); }
  std::vector<std::size_t> batch_sizes() const;

 private:
  MockEmbeddingBackend inner_;
  std::atomic<int> failures_;
  std::atomic<int> calls_{0};
  mutable std::mutex mutex_;
  std::vector<std::size_t> batch_sizes_;
};

/// Mock embeddings that sleep before answering.
class SlowEmbedding : public EmbeddingBackend {
 public:
  SlowEmbedding(std::size_t dim, std::chrono::milliseconds delay)
      : inner_(dim, 0), delay_(delay) {}

  std::string model_name() const override { return "slow"; }
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

 private:
  MockEmbeddingBackend inner_;
  std::chrono::milliseconds delay_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace chunkbench::testing
