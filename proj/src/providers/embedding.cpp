#include <cctype>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "chunkbench/error.h"
#include "chunkbench/hashing.h"
#include "chunkbench/providers.h"
#include "chunkbench/remote.h"
#include "chunkbench/text.h"
#include "retry.h"

namespace chunkbench {

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dot: dimensions " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  return dot(std::span<const float>(a.values), std::span<const float>(b.values));
}

double l2_norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

bool normalize_in_place(std::vector<float>& v) {
  double n = l2_norm(v);
  if (n == 0.0 || !std::isfinite(n)) return false;
  for (auto& x : v) x = static_cast<float>(static_cast<double>(x) / n);
  return true;
}

std::string_view to_string(ProviderKind k) {
  return k == ProviderKind::mock ? "mock" : "remote";
}

ProviderKind parse_provider_kind(std::string_view name) {
  if (name == "mock") return ProviderKind::mock;
  if (name == "remote") return ProviderKind::remote;
  throw ConfigError("unknown provider kind \"" + std::string(name) + "\"");
}

void ProviderConfig::validate() const {
  if (kind == ProviderKind::remote && (!endpoint || endpoint->empty())) {
    throw ConfigError("remote provider \"" + model_name + "\" needs an endpoint");
  }
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (kind == ProviderKind::mock && dim == 0) {
    throw ConfigError("mock embedder needs a positive dimension");
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> hashing_tokens(std::string_view input) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(text::to_lower(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < input.size(); ++i) {
    auto c = static_cast<unsigned char>(input[i]);
    if (c < 0x80) {
      if (std::isalnum(c)) {
        cur.push_back(static_cast<char>(c));
      } else {
        flush();
      }
    } else if (c == 0xC2) {
      // Latin-1 punctuation and symbols (§, «, », NBSP, ...) separate words.
      flush();
      ++i;
    } else {
      cur.push_back(static_cast<char>(c));
    }
  }
  flush();
  return out;
}

MockEmbeddingBackend::MockEmbeddingBackend(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw ConfigError("mock embedder needs a positive dimension");
}

std::string MockEmbeddingBackend::model_name() const {
  return "feature-hash/seed=" + std::to_string(seed_);
}

std::vector<float> MockEmbeddingBackend::embed_one(std::string_view text) const {
  auto tokens = hashing_tokens(text);
  if (tokens.empty()) tokens.emplace_back(text::trim(text));
  std::vector<float> v(dim_, 0.0f);
  for (const auto& tok : tokens) {
    std::uint64_t h = stable_hash64(tok, seed_);
    std::size_t bucket = static_cast<std::size_t>((h & 0x7FFFFFFFFFFFFFFFULL) % dim_);
    v[bucket] += (h >> 63) ? -1.0f : 1.0f;
  }
  if (!normalize_in_place(v)) {
    // Every token cancelled out; fall back to the bucket of the whole text.
    std::uint64_t h = stable_hash64(text, seed_ ^ 0x5bd1e995ULL);
    v.assign(dim_, 0.0f);
    v[static_cast<std::size_t>(h % dim_)] = 1.0f;
  }
  return v;
}

std::vector<std::vector<float>> MockEmbeddingBackend::embed(
    std::span<const std::string> texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

// ---------------------------------------------------------------------------

EmbeddingService::EmbeddingService(ProviderConfig config,
                                   std::unique_ptr<EmbeddingBackend> backend)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      cache_(config_.cache_dir),
      dim_(config_.dim) {
  config_.validate();
}

std::vector<float> EmbeddingService::check_dim(std::vector<float> v) {
  std::size_t expected = dim_.load();
  if (expected == 0) {
    dim_.compare_exchange_strong(expected, v.size());
    expected = dim_.load();
  }
  if (v.size() != expected) {
    throw ConfigError("embedding dimension " + std::to_string(v.size()) +
                      " does not match the configured/cached dimension " +
                      std::to_string(expected) + " for model " + backend_->model_name());
  }
  return v;
}

std::vector<EmbeddingVector> EmbeddingService::embed_batch(
    std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out(texts.size());
  if (texts.empty()) return out;
  const std::string model = backend_->model_name();

  // Unique texts with the input positions they fill.
  std::unordered_map<std::string_view, std::vector<std::size_t>> positions;
  std::vector<std::string_view> order;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (text::trim(texts[i]).empty()) {
      throw ConfigError("embed_batch: input " + std::to_string(i) + " is empty");
    }
    auto [it, fresh] = positions.try_emplace(texts[i]);
    if (fresh) order.push_back(texts[i]);
    it->second.push_back(i);
  }

  auto fill = [&](std::string_view t, std::vector<float> v) {
    for (auto i : positions[t]) out[i].values = v;
  };

  struct Miss {
    std::string_view text;
    std::string key;
  };
  std::vector<Miss> misses;
  for (auto t : order) {
    auto key = ResultCache::make_key("embed", model, t);
    if (auto hit = cache_.get("embed", key)) {
      fill(t, check_dim(hit->get<std::vector<float>>()));
      stats_.cache_hits += positions[t].size();
    } else {
      misses.push_back(Miss{t, std::move(key)});
    }
  }
  if (misses.empty()) return out;

  // Misses are handled one batch at a time: lock the batch's keys (in key
  // order, so concurrent callers cannot deadlock), re-check, call, store.
  for (std::size_t b = 0; b < misses.size(); b += config_.batch_size) {
    const std::size_t e = std::min(misses.size(), b + config_.batch_size);
    std::vector<const Miss*> by_key;
    for (std::size_t i = b; i < e; ++i) by_key.push_back(&misses[i]);
    std::sort(by_key.begin(), by_key.end(),
              [](const Miss* x, const Miss* y) { return x->key < y->key; });
    std::vector<ResultCache::KeyLock> locks;
    locks.reserve(by_key.size());
    for (const Miss* m : by_key) locks.push_back(cache_.lock("embed", m->key));

    std::vector<const Miss*> todo;
    std::vector<std::string> batch;
    for (std::size_t i = b; i < e; ++i) {
      if (auto hit = cache_.get("embed", misses[i].key)) {
        fill(misses[i].text, check_dim(hit->get<std::vector<float>>()));
        stats_.cache_hits += positions[misses[i].text].size();
      } else {
        todo.push_back(&misses[i]);
        batch.emplace_back(misses[i].text);
      }
    }
    if (todo.empty()) continue;
    stats_.cache_misses += todo.size();
    const std::size_t range_begin = positions[todo.front()->text].front();
    const std::size_t range_end = positions[todo.back()->text].front() + 1;

    auto vectors = detail::with_retries(config_, range_begin, range_end, [&] {
      ++stats_.backend_calls;
      auto r = backend_->embed(batch);
      if (r.size() != batch.size()) {
        throw TransportError("provider returned " + std::to_string(r.size()) +
                             " vectors for " + std::to_string(batch.size()) + " inputs");
      }
      return r;
    });
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      auto v = check_dim(std::move(vectors[i]));
      if (!normalize_in_place(v)) {
        throw ConfigError("provider returned a zero embedding");
      }
      cache_.put("embed", todo[i]->key, nlohmann::json(v));
      ++stats_.stored;
      fill(todo[i]->text, std::move(v));
    }
  }
  return out;
}

EmbeddingVector EmbeddingService::embed(std::string_view text) {
  std::string t(text);
  return embed_batch(std::span<const std::string>(&t, 1)).front();
}

std::unique_ptr<EmbeddingService> make_embedding_service(const ProviderConfig& config) {
  config.validate();
  std::unique_ptr<EmbeddingBackend> backend;
  if (config.kind == ProviderKind::mock) {
    backend = std::make_unique<MockEmbeddingBackend>(config.dim, config.seed);
  } else {
    backend = std::make_unique<RemoteEmbeddingBackend>(config);
  }
  return std::make_unique<EmbeddingService>(config, std::move(backend));
}

}  // namespace chunkbench
