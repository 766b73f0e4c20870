#include "fixtures.h"

#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "chunkbench/hashing.h"
#include "chunkbench/remote.h"

namespace chunkbench::testing {

namespace fs = std::filesystem;

Corpus build_corpus(const CorpusSpec& spec, const std::string& name) {
  Corpus corpus;
  corpus.name = name;
  for (const auto& s : spec.sections) {
    Section sec;
    sec.section_id = s.id;
    sec.heading = s.heading;
    sec.hierarchy = spec.hierarchy;
    int ordinal = 0;
    for (std::size_t b = 0; b < s.subsections.size(); ++b) {
      Subsection sub;
      sub.ordinal = static_cast<int>(b) + 1;
      for (const auto& text : s.subsections[b]) sub.sentences.push_back(Sentence{++ordinal, text});
      sec.subsections.push_back(std::move(sub));
    }
    corpus.sections.push_back(std::move(sec));
  }
  return corpus;
}

std::string render_plain(const CorpusSpec& spec) {
  std::string out = "Fixture statute\n\n";
  static const char* kLevels[] = {"Book", "Division", "Title", "Subtitle"};
  const std::optional<std::string>* labels[] = {&spec.hierarchy.book, &spec.hierarchy.division,
                                                &spec.hierarchy.title, &spec.hierarchy.subtitle};
  for (int l = 0; l < 4; ++l) {
    if (labels[l]->has_value()) {
      out += std::string(kLevels[l]) + " " + std::to_string(l + 1) + ": " + **labels[l] + "\n";
    }
  }
  for (const auto& s : spec.sections) {
    out += "\n\xC2\xA7 " + s.id + " " + s.heading + "\n";
    for (std::size_t b = 0; b < s.subsections.size(); ++b) {
      out += "(" + std::to_string(b + 1) + ")";
      for (const auto& sentence : s.subsections[b]) out += " " + sentence;
      out += "\n";
    }
  }
  return out;
}

CorpusSpec lease_spec() {
  CorpusSpec spec;
  spec.hierarchy.book = "Law of Obligations";
  spec.hierarchy.division = "Lease";
  spec.sections.push_back(
      {"535",
       "Contents and primary duties of the lease agreement",
       {{"A lease agreement imposes on the lessor a duty to grant the lessee use of the leased "
         "property for the lease period.",
         "The lessor is to make available the leased property to the lessee in a condition "
         "suitable for use as contractually agreed and maintain it in this condition for the "
         "lease period.",
         "The lessor is to bear all costs to which the leased property is subject."},
        {"The lessee is obliged to pay the lessor the agreed rent."}}});
  return spec;
}

CorpusSpec minors_lumber_spec() {
  CorpusSpec spec;
  spec.hierarchy.book = "General Part";
  spec.hierarchy.division = "Legal transactions";
  spec.sections.push_back(
      {"111",
       "Unilateral legal transactions",
       {{"A unilateral legal transaction that a minor undertakes without the necessary consent "
         "of the legal representative is ineffective.",
         "If the minor undertakes such a legal transaction with regard to another person with "
         "this consent, the legal transaction is ineffective if the minor does not present the "
         "consent in writing and the other person rejects the legal transaction for this reason "
         "without undue delay.",
         "Rejection is not possible if the representative had given the other person notice of "
         "the consent."}}});
  spec.sections.push_back(
      {"112",
       "Independent operation of a trade or business",
       {{"If the legal representative, with the ratification of the family court, authorises "
         "the minor to operate a trade or business independently, the minor has unlimited "
         "capacity to contract for such transactions as the business operations entail.",
         "Legal transactions are exempt for which the representative needs to obtain the "
         "ratification of the family court."},
        {"The authorisation may be revoked by the legal representative only with the "
         "ratification of the family court."}}});
  spec.sections.push_back(
      {"113",
       "Service or employment relationship",
       {{"If the legal representative authorises the minor to enter service or employment, the "
         "minor has unlimited capacity to enter into transactions that relate to entering or "
         "leaving service or employment of the permitted nature or performing the duties "
         "arising from such a relationship.",
         "Contracts are exempt for which the legal representative needs to obtain the "
         "ratification of the family court."},
        {"The authorisation may be revoked or restricted by the legal representative."}}});
  return spec;
}

CorpusSpec sale_spec() {
  CorpusSpec spec;
  spec.hierarchy.book = "Law of Obligations";
  spec.hierarchy.division = "Sale";
  spec.sections.push_back(
      {"433",
       "Typical contractual duties in a purchase agreement",
       {{"By a purchase agreement, the seller of a thing is obliged to deliver the thing to the "
         "buyer and to procure ownership of the thing for the buyer.",
         "The seller must procure the thing for the buyer free from material and legal "
         "defects."},
        {"The buyer is obliged to pay the seller the agreed purchase price and to accept "
         "delivery of the thing purchased."}}});
  return spec;
}

CorpusSpec penalty_spec() {
  CorpusSpec spec;
  spec.hierarchy.book = "Law of Obligations";
  spec.hierarchy.division = "Contractual obligations";
  spec.hierarchy.title = "Promise of a penalty for breach of contract";
  spec.sections.push_back(
      {"339",
       "Payability of penalty for breach of contract",
       {{"Where the obligor promises the obligee, in the event of their failing to perform "
         "their obligation or failing to do so properly, payment of an amount of money as a "
         "penalty, the penalty is payable upon the obligor being in default.",
         "If the performance owed consists in forbearance, the penalty is payable upon breach."}}});
  spec.sections.push_back(
      {"340",
       "Promise to pay a penalty for non-performance",
       {{"If the obligor has promised the penalty in the event of their failing to perform their "
         "obligation, then the obligee may demand the penalty that is payable in lieu of "
         "fulfilment.",
         "If the obligee declares to the obligor that they demand the penalty, the claim to "
         "performance is excluded."}}});
  spec.sections.push_back(
      {"341",
       "Promise of a penalty for improper performance",
       {{"If the obligor has promised the penalty in the event of their failing to perform their "
         "obligation properly, including performance at the specified time, the obligee may "
         "demand the payable penalty in addition to performance."}}});
  return spec;
}

CorpusSpec minors_consent_spec() {
  CorpusSpec spec;
  spec.hierarchy.book = "General Part";
  spec.hierarchy.division = "Legal transactions";
  spec.sections.push_back(
      {"107",
       "Consent of legal representative",
       {{"For a declaration of intent as a result of which minors do not receive merely a legal "
         "benefit, the minors require consent by their legal representative."}}});
  spec.sections.push_back(
      {"108",
       "Entry into a contract without consent",
       {{"If the minor enters into a contract without the necessary consent of the legal "
         "representative, the effectiveness of the contract is subject to approval by the legal "
         "representative."}}});
  spec.sections.push_back(
      {"111",
       "Unilateral legal transactions",
       {{"A unilateral legal transaction that a minor undertakes without the necessary consent "
         "of the legal representative is ineffective."}}});
  spec.sections.push_back(
      {"433",
       "Typical contractual duties in a purchase agreement",
       {{"The buyer is obliged to pay the seller the agreed purchase price and to accept "
         "delivery of the thing purchased."}}});
  spec.sections.push_back(
      {"535",
       "Contents and primary duties of the lease agreement",
       {{"The lessee is obliged to pay the lessor the agreed rent."}}});
  return spec;
}

namespace {

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the",      "party",   "shall",    "may",      "contract",  "obligation", "claim",
      "person",   "court",   "right",    "notice",   "period",    "agreement",  "provision",
      "payment",  "damage",  "property", "owner",    "debtor",    "creditor",   "declaration",
      "consent",  "time",    "law",      "duty",     "demand",    "performance", "effect",
      "case",     "party's", "within",   "without",  "against",   "under",      "unless",
      "where",    "if",      "is",       "are",      "of",        "to",         "in",
      "for",      "by",      "on",       "a",        "an",        "that",       "this"};
  return words;
}

// Distinct pseudo-word per index: four syllables, base 16.
std::string keyword(std::size_t index) {
  static const char* kSyllables[] = {"ka", "lo", "mi", "ru", "te", "sa", "vo", "pe",
                                     "zu", "ni", "bo", "da", "fe", "gu", "hi", "jo"};
  std::string w;
  for (int i = 0; i < 4; ++i) {
    w += kSyllables[index % 16];
    index /= 16;
  }
  return w;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(std::size_t sections, std::uint64_t seed) {
  SplitMix64 rng(seed);
  SyntheticCorpus out;
  out.spec.hierarchy.book = "Synthetic Code";
  const auto& filler = filler_words();
  std::size_t next_keyword = 0;
  for (std::size_t s = 0; s < sections; ++s) {
    std::vector<std::string> kws;
    for (int k = 0; k < 4; ++k) kws.push_back(keyword(next_keyword++));
    SectionSpec spec;
    spec.id = std::to_string(s + 1);
    spec.heading = "Provision on " + kws[0];
    const std::size_t subs = 1 + uniform_index(rng, 3);
    for (std::size_t b = 0; b < subs; ++b) {
      std::vector<std::string> sentences;
      const std::size_t count = 1 + uniform_index(rng, 3);
      for (std::size_t j = 0; j < count; ++j) {
        const std::size_t len = 8 + uniform_index(rng, 10);
        std::string sentence;
        for (std::size_t t = 0; t < len; ++t) {
          const bool key = uniform_index(rng, 4) == 0;
          const std::string& w =
              key ? kws[uniform_index(rng, kws.size())] : filler[uniform_index(rng, filler.size())];
          if (!sentence.empty()) sentence += ' ';
          sentence += w;
        }
        sentence[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
        sentences.push_back(sentence + ".");
      }
      spec.subsections.push_back(std::move(sentences));
    }
    out.spec.sections.push_back(std::move(spec));
    out.keywords.push_back(std::move(kws));
  }
  out.corpus = build_corpus(out.spec, "synthetic");
  return out;
}

std::vector<QARecord> make_planted_queries(const SyntheticCorpus& corpus, std::size_t count,
                                           std::uint64_t seed) {
  SplitMix64 rng(seed);
  const auto& filler = filler_words();
  const std::size_t n = corpus.corpus.sections.size();
  std::vector<QARecord> out;
  for (std::size_t q = 0; q < count; ++q) {
    QARecord r;
    r.query_id = "q" + std::to_string(q + 1);
    std::set<std::size_t> gold{uniform_index(rng, n)};
    if (uniform_index(rng, 3) == 0) gold.insert(uniform_index(rng, n));
    std::string question = "Which rule applies";
    for (std::size_t g : gold) {
      r.gold_section_ids.push_back(corpus.corpus.sections[g].section_id);
      for (int k = 0; k < 2; ++k) {
        question += " " + filler[uniform_index(rng, filler.size())];
        question += " " + corpus.keywords[g][uniform_index(rng, corpus.keywords[g].size())];
      }
    }
    r.question = question + "?";
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<float>> random_unit_vectors(std::size_t n, std::size_t dim,
                                                    std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<float>> out(n, std::vector<float>(dim));
  for (auto& v : out) {
    double norm = 0.0;
    for (auto& x : v) {
      // Box-Muller keeps the stream identical across standard libraries.
      const double u1 = 1.0 - uniform01(rng);
      const double u2 = uniform01(rng);
      x = static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2));
      norm += static_cast<double>(x) * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x = static_cast<float>(x / norm);
  }
  return out;
}

VectorIndex index_from_vectors(const std::vector<std::vector<float>>& vectors,
                               const std::vector<std::string>& parents) {
  VectorIndex index(vectors.empty() ? 1 : vectors.front().size(), "fixture");
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    index.add(vectors[i], UnitMetadata{"u" + std::to_string(i),
                                       {parents.empty() ? "s" + std::to_string(i) : parents[i]}});
  }
  index.finalize();
  return index;
}

ProviderConfig mock_config(std::size_t dim, std::uint64_t seed) {
  ProviderConfig c;
  c.kind = ProviderKind::mock;
  c.dim = dim;
  c.seed = seed;
  c.backoff_ms = 0;
  return c;
}

std::unique_ptr<EmbeddingService> mock_embedder(std::size_t dim, std::uint64_t seed) {
  return make_embedding_service(mock_config(dim, seed));
}

std::unique_ptr<GenerationService> mock_generator() {
  return make_generation_service(mock_config());
}

std::string ScriptedGeneration::lumber_boundary(std::span<const LumberUnit> group,
                                                std::size_t budget_tokens) {
  std::unique_lock lock(mutex_);
  group_sizes_.push_back(group.size());
  if (!lumber_answers_.empty()) {
    std::string answer = lumber_answers_.front();
    lumber_answers_.pop_front();
    return answer;
  }
  lock.unlock();
  return MockGenerationBackend::lumber_boundary(group, budget_tokens);
}

std::vector<std::size_t> ScriptedGeneration::group_sizes() const {
  std::lock_guard lock(mutex_);
  return group_sizes_;
}

std::vector<std::vector<float>> FlakyEmbedding::embed(std::span<const std::string> texts) {
  ++calls_;
  {
    std::lock_guard lock(mutex_);
    batch_sizes_.push_back(texts.size());
  }
  if (failures_.fetch_sub(1) > 0) throw TransportError("simulated outage");
  return inner_.embed(texts);
}

std::vector<std::size_t> FlakyEmbedding::batch_sizes() const {
  std::lock_guard lock(mutex_);
  return batch_sizes_;
}

std::vector<std::vector<float>> SlowEmbedding::embed(std::span<const std::string> texts) {
  std::this_thread::sleep_for(delay_);
  return inner_.embed(texts);
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() /
          ("chunkbench-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace chunkbench::testing
