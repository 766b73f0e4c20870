#include <algorithm>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "chunkbench/error.h"
#include "chunkbench/hashing.h"
#include "chunkbench/strategies.h"
#include "chunkbench/text.h"
#include "parallel.h"

namespace chunkbench {

std::vector<IndexedUnit> build_flat(std::span<const BaseUnit> units, EmbeddingService& embedder,
                                    const std::string& strategy_tag) {
  std::vector<std::string> texts;
  texts.reserve(units.size());
  for (const auto& u : units) texts.push_back(u.text);
  auto vectors = embedder.embed_batch(texts);

  std::vector<IndexedUnit> out;
  out.reserve(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    out.push_back(IndexedUnit{units[i].unit_id, std::move(vectors[i]),
                              {units[i].parent_section_id}, std::move(texts[i]), strategy_tag,
                              {i}, 0, 0});
  }
  return out;
}

std::vector<IndexedUnit> build_fixed(const Corpus& corpus, std::size_t window_tokens,
                                     std::size_t overlap_tokens, EmbeddingService& embedder) {
  if (window_tokens == 0 || window_tokens <= overlap_tokens) {
    throw ConfigError("fixed windows need window_tokens > overlap_tokens");
  }
  const auto stream = render_token_stream(corpus);
  const std::size_t total = stream.tokens.size();
  const std::size_t count = fixed_window_count(total, window_tokens, overlap_tokens);
  const std::size_t stride = window_tokens - overlap_tokens;
  const std::string tag =
      "Fixed " + std::to_string(window_tokens) + " / " + std::to_string(overlap_tokens);
  const std::string id_prefix =
      "fixed-" + std::to_string(window_tokens) + "-" + std::to_string(overlap_tokens) + ":";

  std::vector<IndexedUnit> out;
  std::vector<std::string> texts;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t begin = j * stride;
    const std::size_t end = std::min(total, begin + window_tokens);
    std::string text;
    std::vector<std::string> parents;
    for (std::size_t t = begin; t < end; ++t) {
      if (t > begin) text.push_back(' ');
      text.append(stream.tokens[t]);
      const auto& id = corpus.sections[stream.section_of[t]].section_id;
      // Tokens arrive in corpus order, so a section can only repeat the last one.
      if (parents.empty() || parents.back() != id) parents.push_back(id);
    }
    texts.push_back(text);
    out.push_back(IndexedUnit{id_prefix + std::to_string(j), {}, std::move(parents),
                              std::move(text), tag, {}, begin, end});
  }
  auto vectors = embedder.embed_batch(texts);
  for (std::size_t j = 0; j < count; ++j) out[j].vector = std::move(vectors[j]);
  return out;
}

std::string contextual_embedded_text(std::string_view prefix, Granularity granularity,
                                     std::string_view unit_text) {
  std::string out;
  if (!prefix.empty()) out.append("Additional context: ").append(prefix).push_back('\n');
  out.append(display_label(granularity)).append(": ").append(unit_text);
  return out;
}

std::vector<IndexedUnit> build_contextual(std::span<const BaseUnit> units, const Corpus& corpus,
                                          GenerationService& generator,
                                          EmbeddingService& embedder, std::size_t workers) {
  std::unordered_map<std::string_view, SectionContext> contexts;
  for (const auto& u : units) {
    if (u.granularity == Granularity::section) {
      throw ConfigError("contextual builds use subsection, sentence or proposition units");
    }
    if (contexts.contains(u.parent_section_id)) continue;
    const Section* sec = corpus.find(u.parent_section_id);
    if (!sec) throw ConfigError("unit " + u.unit_id + " refers to an unknown section");
    contexts.emplace(u.parent_section_id, make_section_context(*sec));
  }

  std::vector<std::string> texts(units.size());
  detail::parallel_for(units.size(), workers, [&](std::size_t i) {
    const auto& u = units[i];
    auto prefix = generator.contextual_prefix(u, contexts.at(u.parent_section_id));
    texts[i] = contextual_embedded_text(prefix, u.granularity, u.text);
  });
  auto vectors = embedder.embed_batch(texts);

  std::vector<IndexedUnit> out;
  out.reserve(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    const std::string tag = "Contextual " + std::string(display_label(units[i].granularity));
    out.push_back(IndexedUnit{units[i].unit_id, std::move(vectors[i]),
                              {units[i].parent_section_id}, std::move(texts[i]), tag, {i}, 0, 0});
  }
  return out;
}

std::vector<IndexedUnit> build_lumber(std::span<const BaseUnit> units, const Corpus& corpus,
                                      std::size_t budget_tokens, GenerationService& generator,
                                      EmbeddingService& embedder) {
  if (budget_tokens == 0) throw ConfigError("Lumber needs a token budget >= 1");
  const SectionOrder order(corpus);
  std::vector<std::size_t> tokens(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) tokens[i] = text::count_tokens(units[i].text);

  std::vector<IndexedUnit> out;
  std::vector<std::string> texts;
  std::size_t pos = 0;
  while (pos < units.size()) {
    // Largest group from pos that fits the budget; an oversized unit stands alone.
    std::size_t end = pos + 1;
    std::size_t used = tokens[pos];
    while (end < units.size() && used + tokens[end] <= budget_tokens) used += tokens[end++];

    std::size_t take = end - pos;
    if (take > 1) {
      const std::size_t split =
          generator.lumber_split(units.subspan(pos, end - pos), budget_tokens);
      take = split - 1;
    }

    std::vector<std::size_t> members(take);
    std::vector<std::string> parts;
    for (std::size_t k = 0; k < take; ++k) {
      members[k] = pos + k;
      parts.push_back(units[pos + k].text);
    }
    std::string text = text::join(parts, " ");
    texts.push_back(text);
    const std::string tag =
        "Lumber " + std::string(display_label(units[pos].granularity));
    out.push_back(IndexedUnit{"lumber:" + std::to_string(out.size()), {},
                              ordered_parents(units, members, order), std::move(text), tag,
                              std::move(members), 0, 0});
    pos += take;
  }
  auto vectors = embedder.embed_batch(texts);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].vector = std::move(vectors[i]);
  return out;
}

void write_chunk_manifest(const std::filesystem::path& path,
                          std::span<const IndexedUnit> units) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& u : units) {
    nlohmann::ordered_json j{{"chunk_id", u.chunk_id},
                             {"strategy_tag", u.strategy_tag},
                             {"parent_section_ids", u.parent_section_ids},
                             {"embedded_text_sha256", sha256_hex(u.embedded_text)},
                             {"token_count", text::count_tokens(u.embedded_text)}};
    out << j.dump() << '\n';
  }
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace chunkbench
