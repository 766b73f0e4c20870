#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include <httplib.h>

#include "chunkbench/error.h"
#include "chunkbench/providers.h"
#include "chunkbench/remote.h"
#include "fixtures.h"

namespace chunkbench {
namespace {

using testing::mock_config;

TEST(VectorMath, DotAndNorm) {
  const std::vector<float> a{3.0f, 4.0f}, b{1.0f, 0.0f};
  EXPECT_DOUBLE_EQ(dot(a, b), 3.0);
  EXPECT_DOUBLE_EQ(l2_norm(a), 5.0);
  std::vector<float> v = a;
  ASSERT_TRUE(normalize_in_place(v));
  EXPECT_NEAR(l2_norm(v), 1.0, 1e-7);
  std::vector<float> zero(3, 0.0f);
  EXPECT_FALSE(normalize_in_place(zero));
}

TEST(MockEmbedding, DeterministicAndUnitLength) {
  auto a = testing::mock_embedder(64, 5);
  auto b = testing::mock_embedder(64, 5);
  const auto va = a->embed("The lessee is obliged to pay the lessor the agreed rent.");
  const auto vb = b->embed("The lessee is obliged to pay the lessor the agreed rent.");
  EXPECT_EQ(va, vb);
  EXPECT_EQ(va.dim(), 64u);
  EXPECT_NEAR(l2_norm(va.values), 1.0, 1e-6);
}

TEST(MockEmbedding, SeedChangesVectors) {
  auto a = testing::mock_embedder(64, 1);
  auto b = testing::mock_embedder(64, 2);
  EXPECT_NE(a->embed("agreed rent"), b->embed("agreed rent"));
}

TEST(MockEmbedding, LexicalOverlapRaisesSimilarity) {
  auto e = testing::mock_embedder(256, 0);
  const auto q = e->embed("lessee pays agreed rent");
  const auto near = e->embed("The lessee is obliged to pay the lessor the agreed rent.");
  const auto far = e->embed("A unilateral legal transaction of a minor is ineffective.");
  EXPECT_GT(dot(q, near), dot(q, far));
}

TEST(MockEmbedding, TokensAreLowercaseWords) {
  EXPECT_EQ(hashing_tokens("The Lessor's RENT, paid."),
            (std::vector<std::string>{"the", "lessor", "s", "rent", "paid"}));
}

TEST(EmbeddingService, DeduplicatesAndCaches) {
  auto backend = std::make_unique<testing::FlakyEmbedding>(32, 0);
  auto* raw = backend.get();
  EmbeddingService service(mock_config(32), std::move(backend));
  const std::vector<std::string> texts{"alpha beta", "gamma", "alpha beta"};
  const auto first = service.embed_batch(texts);
  EXPECT_EQ(raw->calls(), 1);
  EXPECT_EQ(raw->batch_sizes(), std::vector<std::size_t>{2});
  EXPECT_EQ(first[0], first[2]);
  const auto second = service.embed_batch(texts);
  EXPECT_EQ(raw->calls(), 1);
  EXPECT_EQ(second, first);
  EXPECT_EQ(service.stats().cache_hits.load(), 3u);
}

TEST(EmbeddingService, SplitsIntoConfiguredBatches) {
  auto backend = std::make_unique<testing::FlakyEmbedding>(16, 0);
  auto* raw = backend.get();
  ProviderConfig config = mock_config(16);
  config.batch_size = 4;
  EmbeddingService service(config, std::move(backend));
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back("text number " + std::to_string(i));
  service.embed_batch(texts);
  EXPECT_EQ(raw->batch_sizes(), (std::vector<std::size_t>{4, 4, 2}));
  EXPECT_EQ(service.stats().backend_calls.load(), 3u);
}

TEST(EmbeddingService, RetriesTransientFailures) {
  auto backend = std::make_unique<testing::FlakyEmbedding>(16, 2);
  auto* raw = backend.get();
  ProviderConfig config = mock_config(16);
  config.max_retries = 3;
  EmbeddingService service(config, std::move(backend));
  const auto v = service.embed("needs three attempts");
  EXPECT_EQ(raw->calls(), 3);
  EXPECT_EQ(v.dim(), 16u);
}

TEST(EmbeddingService, PersistentFailureNamesTheBatch) {
  auto backend = std::make_unique<testing::FlakyEmbedding>(16, 1000);
  ProviderConfig config = mock_config(16);
  config.max_retries = 2;
  config.batch_size = 2;
  EmbeddingService service(config, std::move(backend));
  const std::vector<std::string> texts{"one", "two", "three"};
  try {
    service.embed_batch(texts);
    FAIL() << "expected ProviderUnavailable";
  } catch (const ProviderUnavailable& e) {
    EXPECT_EQ(e.batch_begin(), 0u);
    EXPECT_EQ(e.batch_end(), 2u);
  }
}

TEST(EmbeddingService, DiskCacheSurvivesRestartAndResumes) {
  testing::TempDir dir;
  ProviderConfig config = mock_config(16);
  config.cache_dir = dir.path();
  config.max_retries = 0;
  const std::vector<std::string> texts{"first text", "second text", "third text"};
  {
    // The first batch succeeds, the second never does.
    auto backend = std::make_unique<testing::FlakyEmbedding>(16, 0);
    config.batch_size = 2;
    EmbeddingService service(config, std::move(backend));
    service.embed_batch(std::span(texts).first(2));
  }
  auto backend = std::make_unique<testing::FlakyEmbedding>(16, 0);
  auto* raw = backend.get();
  EmbeddingService resumed(config, std::move(backend));
  resumed.embed_batch(texts);
  EXPECT_EQ(raw->batch_sizes(), std::vector<std::size_t>{1});
  EXPECT_EQ(resumed.stats().cache_hits.load(), 2u);
}

TEST(EmbeddingService, CachedDimensionMismatchIsConfigError) {
  testing::TempDir dir;
  ProviderConfig config = mock_config(16);
  config.cache_dir = dir.path();
  {
    EmbeddingService service(config, std::make_unique<testing::FlakyEmbedding>(16, 0));
    service.embed("shared text");
  }
  config.dim = 32;
  EmbeddingService other(config, std::make_unique<testing::FlakyEmbedding>(16, 0));
  EXPECT_THROW(other.embed("shared text"), ConfigError);
}

TEST(EmbeddingService, EmptyInputIsRejected) {
  auto e = testing::mock_embedder(16);
  EXPECT_THROW(e->embed("   "), ConfigError);
}

TEST(EmbeddingService, ConcurrentCallersAgree) {
  auto service = testing::mock_embedder(32);
  std::vector<std::vector<EmbeddingVector>> results(4);
  std::vector<std::string> texts;
  for (int i = 0; i < 50; ++i) texts.push_back("shared item " + std::to_string(i % 20));
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] { results[t] = service->embed_batch(texts); });
  }
  for (auto& t : threads) t.join();
  for (int t = 1; t < 4; ++t) EXPECT_EQ(results[t], results[0]);
}

TEST(ProviderConfig, RemoteNeedsEndpoint) {
  ProviderConfig c;
  c.kind = ProviderKind::remote;
  EXPECT_THROW(c.validate(), ConfigError);
  c.endpoint = "http://127.0.0.1:1/embed";
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(parse_provider_kind("openai"), ConfigError);
  EXPECT_EQ(parse_provider_kind("mock"), ProviderKind::mock);
}

TEST(ResultCacheTest, KeysDependOnEveryPart) {
  const auto k = ResultCache::make_key("embed", "m", "text");
  EXPECT_NE(k, ResultCache::make_key("embed", "m2", "text"));
  EXPECT_NE(k, ResultCache::make_key("summarize", "m", "text"));
  EXPECT_NE(k, ResultCache::make_key("embed", "m", "text2"));
  EXPECT_EQ(k.size(), 64u);
}

TEST(ResultCacheTest, DiskEntriesAreShardedFiles) {
  testing::TempDir dir;
  ResultCache cache(dir.path());
  const auto key = ResultCache::make_key("embed", "m", "x");
  cache.put("embed", key, nlohmann::json{1, 2, 3});
  EXPECT_TRUE(std::filesystem::exists(cache.entry_path("embed", key)));
  ResultCache reopened(dir.path());
  EXPECT_EQ(reopened.get("embed", key), (nlohmann::json{1, 2, 3}));
  EXPECT_FALSE(reopened.get("embed", ResultCache::make_key("embed", "m", "y")).has_value());
}

TEST(MockGeneration, SaleSentenceYieldsTwoPropositions) {
  const Corpus c = testing::build_corpus(testing::sale_spec());
  auto gen = testing::mock_generator();
  const auto units = extract_units(c, Granularity::sentence);
  const auto props = gen->propositionize(units[0], make_section_context(c.sections[0]));
  ASSERT_EQ(props.size(), 2u);
  EXPECT_NE(props[0].find("deliver the thing to the buyer"), std::string::npos);
  EXPECT_EQ(props[0].find("procure"), std::string::npos);
  EXPECT_NE(props[1].find("procure ownership of the thing"), std::string::npos);
  EXPECT_NE(props[1].find("the seller of a thing is obliged"), std::string::npos);
}

TEST(MockGeneration, SelfContainedSentenceStaysWhole) {
  const Corpus c = testing::build_corpus(testing::lease_spec());
  auto gen = testing::mock_generator();
  const auto units = extract_units(c, Granularity::sentence);
  const auto props = gen->propositionize(units[3], make_section_context(c.sections[0]));
  EXPECT_EQ(props, std::vector<std::string>{units[3].text});
}

TEST(MockGeneration, PropositionsNeedSentenceOrSubsection) {
  const Corpus c = testing::build_corpus(testing::lease_spec());
  auto gen = testing::mock_generator();
  const auto sec = extract_units(c, Granularity::section);
  EXPECT_THROW(gen->propositionize(sec[0], make_section_context(c.sections[0])), ConfigError);
}

TEST(MockGeneration, ContextPrefixFromHierarchy) {
  const Corpus c = testing::build_corpus(testing::lease_spec());
  auto gen = testing::mock_generator();
  const auto units = extract_units(c, Granularity::sentence);
  EXPECT_EQ(gen->contextual_prefix(units[3], make_section_context(c.sections[0])),
            "Law of Obligations: Lease: Contents and primary duties of the lease agreement");
}

TEST(MockGeneration, SummaryKeepsLeadingSentences) {
  auto gen = testing::mock_generator();
  const std::vector<std::string> texts{"First one. Second one.", "Third one."};
  EXPECT_EQ(gen->summarize_cluster(texts), "First one. Third one.");
}

TEST(GenerationServiceTest, UnusableLumberAnswersKeepTheGroup) {
  const Corpus c = testing::build_corpus(testing::minors_lumber_spec());
  const auto units = extract_units(c, Granularity::sentence);
  for (const std::string answer : {"1", "0", "42", "no idea", "-3"}) {
    GenerationService gen(mock_config(),
                          std::make_unique<testing::ScriptedGeneration>(
                              std::deque<std::string>{answer}));
    EXPECT_EQ(gen.lumber_split(std::span(units).first(4), 512), 5u) << answer;
    EXPECT_EQ(gen.stats().warnings.load(), 1u) << answer;
  }
  GenerationService gen(mock_config(), std::make_unique<testing::ScriptedGeneration>(
                                           std::deque<std::string>{"Unit 3 starts anew."}));
  EXPECT_EQ(gen.lumber_split(std::span(units).first(4), 512), 3u);
}

TEST(GenerationServiceTest, AnswersAreCached) {
  auto backend = std::make_unique<testing::ScriptedGeneration>(std::deque<std::string>{"3"});
  auto* raw = backend.get();
  GenerationService gen(mock_config(), std::move(backend));
  const Corpus c = testing::build_corpus(testing::minors_lumber_spec());
  const auto units = extract_units(c, Granularity::sentence);
  EXPECT_EQ(gen.lumber_split(std::span(units).first(4), 512), 3u);
  EXPECT_EQ(gen.lumber_split(std::span(units).first(4), 512), 3u);
  EXPECT_EQ(raw->group_sizes().size(), 1u);
  EXPECT_EQ(gen.stats().cache_hits.load(), 1u);
}

TEST(AnswerParsing, PropositionLines) {
  EXPECT_EQ(parse_proposition_lines("- One.\n* Two.\n\n1. Three.\n2) Four.\nProposition 5: Five."),
            (std::vector<std::string>{"One.", "Two.", "Three.", "Four.", "Five."}));
}

TEST(AnswerParsing, FirstInteger) {
  EXPECT_EQ(parse_first_integer("The next chunk starts at 7."), 7);
  EXPECT_EQ(parse_first_integer("[12]"), 12);
  EXPECT_FALSE(parse_first_integer("none").has_value());
  EXPECT_FALSE(parse_first_integer("99999999999999999999").has_value());
}

TEST(Templates, FillsEveryPlaceholder) {
  EXPECT_EQ(fill_template("{a}-{b}-{a}", {{"a", "x"}, {"b", "{a}"}}), "x-{a}-x");
}

// A local HTTP server standing in for a remote provider.
class LocalProvider : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      auth_ = req.get_header_value("Authorization");
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json data = nlohmann::json::array();
      for (const auto& text : body.at("input")) {
        const double len = static_cast<double>(text.get<std::string>().size());
        data.push_back({{"embedding", {len, 1.0, 0.0}}});
      }
      res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    server_.Post("/fail", [](const httplib::Request&, httplib::Response& res) {
      res.status = 503;
    });
    server_.Post("/generate", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const bool lumber = body.at("prompt").get<std::string>().find("[3]") != std::string::npos;
      res.set_content(nlohmann::json{{"output", {{"text", lumber ? "3" : "Summary."}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  ProviderConfig remote(const std::string& path) const {
    ProviderConfig c;
    c.kind = ProviderKind::remote;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + path;
    c.model_name = "local-test";
    c.dim = 0;
    c.max_retries = 1;
    c.backoff_ms = 0;
    c.timeout_seconds = 5;
    c.api_key_env = "CHUNKBENCH_TEST_KEY";
    c.adapter.embeddings_pointer = "/data";
    c.adapter.embedding_field = "embedding";
    c.adapter.text_pointer = "/output/text";
    return c;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::string auth_;
};

TEST_F(LocalProvider, EmbedsThroughAdapterAndNormalizes) {
  setenv("CHUNKBENCH_TEST_KEY", "secret", 1);
  auto service = make_embedding_service(remote("/embed"));
  EXPECT_EQ(service->dim(), 0u);
  const auto v = service->embed("abc");
  EXPECT_EQ(service->dim(), 3u);
  EXPECT_NEAR(v.values[0], 3.0 / std::sqrt(10.0), 1e-6);
  EXPECT_EQ(auth_, "Bearer secret");
  unsetenv("CHUNKBENCH_TEST_KEY");
}

TEST_F(LocalProvider, ServerErrorsBecomeProviderUnavailable) {
  auto service = make_embedding_service(remote("/fail"));
  EXPECT_THROW(service->embed("abc"), ProviderUnavailable);
}

TEST_F(LocalProvider, GenerationReadsTextPointer) {
  auto gen = make_generation_service(remote("/generate"));
  const std::vector<std::string> texts{"Some provision."};
  EXPECT_EQ(gen->summarize_cluster(texts), "Summary.");
  const Corpus c = testing::build_corpus(testing::minors_lumber_spec());
  const auto units = extract_units(c, Granularity::sentence);
  EXPECT_EQ(gen->lumber_split(std::span(units).first(4), 512), 3u);
}

TEST(Transport, UnreachableEndpointThrows) {
  EXPECT_THROW(post_json("http://127.0.0.1:1/x", nlohmann::json::object(), "", 1),
               TransportError);
  EXPECT_THROW(post_json("no-scheme", nlohmann::json::object(), "", 1), ConfigError);
}

}  // namespace
}  // namespace chunkbench
