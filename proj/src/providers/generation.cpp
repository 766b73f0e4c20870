#include <cctype>

#include <spdlog/spdlog.h>

#include "chunkbench/error.h"
#include "chunkbench/providers.h"
#include "chunkbench/remote.h"
#include "chunkbench/text.h"
#include "retry.h"

namespace chunkbench {

namespace {

bool has_terminator(std::string_view s) {
  return !s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?');
}

// Splits `s` at every occurrence of any delimiter; pieces are trimmed and
// empty pieces dropped.
std::vector<std::string> split_on(std::string_view s,
                                  std::initializer_list<std::string_view> delims) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t matched = 0;
    for (auto d : delims) {
      if (s.substr(i, d.size()) == d) {
        matched = d.size();
        break;
      }
    }
    if (matched) {
      auto piece = text::trim(s.substr(start, i - start));
      if (!piece.empty()) out.emplace_back(piece);
      i += matched;
      start = i;
    } else {
      ++i;
    }
  }
  auto piece = text::trim(s.substr(start));
  if (!piece.empty()) out.emplace_back(piece);
  return out;
}

// "X is obliged to A and to B" -> "X is obliged to A", "X is obliged to B".
std::vector<std::string> split_infinitives(const std::string& clause) {
  static constexpr std::string_view kJoin = " and to ";
  auto at = clause.find(kJoin);
  if (at == std::string::npos) return {clause};
  std::string left = clause.substr(0, at);
  auto to = left.find(" to ");
  if (to == std::string::npos) return {clause};
  std::string shared = left.substr(0, to + 1);
  std::vector<std::string> out{left};
  for (auto& rest : split_infinitives(shared + clause.substr(at + kJoin.size() - 3))) {
    out.push_back(std::move(rest));
  }
  return out;
}

}  // namespace

std::string MockGenerationBackend::propositions(std::string_view unit_text,
                                                const SectionContext&) {
  std::string_view whole = text::trim(unit_text);
  const bool terminal = has_terminator(whole);
  std::vector<std::string> out;
  for (const auto& clause : split_on(whole, {";"})) {
    for (const auto& part : split_on(clause, {", and ", ", und "})) {
      for (auto& p : split_infinitives(part)) out.push_back(std::move(p));
    }
  }
  if (out.size() > 1 && terminal) {
    for (auto& p : out) {
      while (!p.empty() && (p.back() == ',' || p.back() == ' ')) p.pop_back();
      if (!has_terminator(p)) p.push_back('.');
    }
  }
  return text::join(out, "\n");
}

std::string MockGenerationBackend::context_prefix(std::string_view,
                                                  const SectionContext& context) {
  auto parts = context.hierarchy.labels();
  if (!context.heading.empty()) parts.push_back(context.heading);
  if (parts.empty()) return "Section " + context.section_id;
  return text::join(parts, ": ");
}

std::string MockGenerationBackend::lumber_boundary(std::span<const LumberUnit> group,
                                                   std::size_t budget_tokens) {
  std::size_t consumed = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (i > 0 && group[i].parent_section_id != group[i - 1].parent_section_id &&
        2 * consumed >= budget_tokens) {
      return std::to_string(i + 1);
    }
    consumed += text::count_tokens(group[i].text);
  }
  return std::to_string(group.size() + 1);
}

std::string MockGenerationBackend::summary(std::span<const std::string> texts) {
  std::vector<std::string> firsts;
  for (const auto& t : texts) {
    auto sentences = segment_sentences(t);
    if (!sentences.empty()) firsts.push_back(std::move(sentences.front()));
  }
  return text::join(firsts, " ");
}

// ---------------------------------------------------------------------------

std::vector<std::string> parse_proposition_lines(std::string_view answer) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= answer.size()) {
    auto nl = answer.find('\n', start);
    if (nl == std::string_view::npos) nl = answer.size();
    std::string_view line = text::trim(answer.substr(start, nl - start));
    start = nl + 1;
    // Strip "-", "*", "•", "1.", "1)", "Proposition 1:" style markers.
    if (text::starts_with(line, "- ") || text::starts_with(line, "* ")) {
      line = text::trim(line.substr(2));
    } else if (text::starts_with(line, "\xE2\x80\xA2")) {
      line = text::trim(line.substr(3));
    } else if (text::starts_with(line, "Proposition ")) {
      auto colon = line.find(':');
      if (colon != std::string_view::npos) line = text::trim(line.substr(colon + 1));
    } else {
      std::size_t i = 0;
      while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
      if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') &&
          line[i + 1] == ' ') {
        line = text::trim(line.substr(i + 1));
      }
    }
    if (!line.empty()) out.push_back(text::normalize_whitespace(line));
    if (nl == answer.size()) break;
  }
  return out;
}

std::optional<long long> parse_first_integer(std::string_view answer) {
  for (std::size_t i = 0; i < answer.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(answer[i]))) continue;
    std::size_t j = i;
    while (j < answer.size() && std::isdigit(static_cast<unsigned char>(answer[j]))) ++j;
    if (j - i > 12) return std::nullopt;
    bool negative = i > 0 && answer[i - 1] == '-';
    long long v = std::stoll(std::string(answer.substr(i, j - i)));
    return negative ? -v : v;
  }
  return std::nullopt;
}

GenerationService::GenerationService(ProviderConfig config,
                                     std::unique_ptr<GenerationBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)), cache_(config_.cache_dir) {
  if (config_.kind == ProviderKind::remote) config_.validate();
}

template <class Fn>
std::string GenerationService::cached(std::string_view operation, std::string_view input,
                                      Fn&& call) {
  auto key = ResultCache::make_key(operation, backend_->model_name(), input);
  if (auto hit = cache_.get(operation, key)) {
    ++stats_.cache_hits;
    return hit->get<std::string>();
  }
  auto lock = cache_.lock(operation, key);
  if (auto hit = cache_.get(operation, key)) {
    ++stats_.cache_hits;
    return hit->get<std::string>();
  }
  ++stats_.cache_misses;
  std::string answer = detail::with_retries(config_, 0, 1, [&] {
    ++stats_.backend_calls;
    return call();
  });
  cache_.put(operation, key, nlohmann::json(answer));
  ++stats_.stored;
  return answer;
}

std::vector<std::string> GenerationService::propositionize(const BaseUnit& unit,
                                                           const SectionContext& context) {
  if (unit.granularity != Granularity::sentence &&
      unit.granularity != Granularity::subsection) {
    throw ConfigError("propositionize needs a sentence or subsection unit, got " +
                      std::string(to_string(unit.granularity)));
  }
  auto answer = cached("propositionize", unit.text,
                       [&] { return backend_->propositions(unit.text, context); });
  auto props = parse_proposition_lines(answer);
  if (props.empty()) {
    ++stats_.warnings;
    spdlog::warn("empty proposition output for {}; keeping the unit text", unit.unit_id);
    return {unit.text};
  }
  return props;
}

std::string GenerationService::contextual_prefix(const BaseUnit& unit,
                                                 const SectionContext& context) {
  std::string input = context.render();
  input.append("\n\x1e\n").append(unit.text);
  auto answer = cached("contextual_prefix", input,
                       [&] { return backend_->context_prefix(unit.text, context); });
  auto prefix = text::truncate_tokens(text::normalize_whitespace(answer), kPrefixTokenCap);
  if (prefix.empty()) {
    ++stats_.warnings;
    spdlog::warn("empty contextual prefix for {}", unit.unit_id);
  }
  return prefix;
}

std::size_t GenerationService::lumber_split(std::span<const BaseUnit> units,
                                            std::size_t budget_tokens) {
  if (units.empty()) throw ConfigError("lumber_split needs at least one unit");
  const std::size_t keep_all = units.size() + 1;
  std::vector<LumberUnit> group;
  std::string input = std::to_string(budget_tokens);
  for (const auto& u : units) {
    group.push_back(LumberUnit{u.text, u.parent_section_id});
    input.append("\n\x1e").append(u.parent_section_id).append("\x1f").append(u.text);
  }
  auto answer = cached("lumber_split", input,
                       [&] { return backend_->lumber_boundary(group, budget_tokens); });
  auto index = parse_first_integer(answer);
  // A split at unit 1 would emit an empty chunk.
  if (!index || *index < 2 || *index > static_cast<long long>(keep_all)) {
    ++stats_.warnings;
    spdlog::warn("unusable Lumber split answer \"{}\" for a group of {} units; keeping the group",
                 text::truncate_tokens(answer, 8), units.size());
    return keep_all;
  }
  return static_cast<std::size_t>(*index);
}

std::string GenerationService::summarize_cluster(std::span<const std::string> texts) {
  if (texts.empty()) throw ConfigError("summarize_cluster needs at least one text");
  std::string input;
  for (const auto& t : texts) input.append(t).append("\n\x1e\n");
  auto answer = cached("summarize", input, [&] { return backend_->summary(texts); });
  auto summary = text::truncate_tokens(text::normalize_whitespace(answer), kSummaryTokenCap);
  if (summary.empty()) {
    ++stats_.warnings;
    spdlog::warn("empty summary for a cluster of {} texts; using leading sentences",
                 texts.size());
    summary = text::truncate_tokens(MockGenerationBackend{}.summary(texts), kSummaryTokenCap);
  }
  return summary;
}

std::unique_ptr<GenerationService> make_generation_service(const ProviderConfig& config,
                                                           const PromptTemplates& prompts) {
  std::unique_ptr<GenerationBackend> backend;
  if (config.kind == ProviderKind::mock) {
    backend = std::make_unique<MockGenerationBackend>();
  } else {
    config.validate();
    backend = std::make_unique<RemoteGenerationBackend>(config, prompts);
  }
  return std::make_unique<GenerationService>(config, std::move(backend));
}

}  // namespace chunkbench
