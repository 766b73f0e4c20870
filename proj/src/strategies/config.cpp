#include <algorithm>
#include <cctype>
#include <cmath>

#include "chunkbench/error.h"
#include "chunkbench/strategies.h"

namespace chunkbench {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::flat: return "flat";
    case Family::fixed: return "fixed";
    case Family::contextual: return "contextual";
    case Family::semantic: return "semantic";
    case Family::lumber: return "lumber";
    case Family::raptor: return "raptor";
  }
  return "flat";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::flat, Family::fixed, Family::contextual, Family::semantic,
                   Family::lumber, Family::raptor}) {
    if (name == to_string(f)) return f;
  }
  throw ConfigError("unknown strategy family \"" + std::string(name) + "\"");
}

void StrategyConfig::validate() const {
  switch (family) {
    case Family::flat:
      return;
    case Family::fixed:
      if (!window_tokens || !overlap_tokens) {
        throw ConfigError("fixed windows need window_tokens and overlap_tokens");
      }
      if (*window_tokens == 0 || *window_tokens <= *overlap_tokens) {
        throw ConfigError("fixed windows need window_tokens > overlap_tokens (got " +
                          std::to_string(*window_tokens) + " / " +
                          std::to_string(*overlap_tokens) + ")");
      }
      return;
    default:
      break;
  }
  if (granularity == Granularity::section) {
    throw ConfigError(std::string(to_string(family)) +
                      " builds use subsection, sentence or proposition units");
  }
  if (family == Family::semantic && cluster_count && *cluster_count == 0) {
    throw ConfigError("semantic clustering needs cluster_count >= 1");
  }
  if (family == Family::lumber && lumber_budget_tokens && *lumber_budget_tokens == 0) {
    throw ConfigError("Lumber needs a token budget >= 1");
  }
  if (family == Family::raptor && reduction() < 2) {
    throw ConfigError("RAPTOR needs a reduction factor >= 2");
  }
}

std::string StrategyConfig::tag() const {
  const std::string label(display_label(granularity));
  switch (family) {
    case Family::flat: return label;
    case Family::fixed:
      return "Fixed " + std::to_string(window_tokens.value_or(0)) + " / " +
             std::to_string(overlap_tokens.value_or(0));
    case Family::contextual: return "Contextual " + label;
    case Family::semantic: return "Semantic " + label;
    case Family::lumber: return "Lumber " + label;
    case Family::raptor: return "RAPTOR " + label;
  }
  return label;
}

std::string StrategyConfig::slug() const {
  std::string out;
  for (char c : tag()) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

std::size_t StrategyConfig::clusters_for(std::size_t unit_count) const {
  if (cluster_count) return *cluster_count;
  auto scaled = static_cast<std::size_t>(std::llround(static_cast<double>(unit_count) / 24.0));
  return std::min(kMaxClusterCount, std::max<std::size_t>(1, scaled));
}

std::vector<StrategyConfig> default_strategy_suite(std::uint64_t seed) {
  std::vector<StrategyConfig> out;
  auto add = [&](Family f, Granularity g) -> StrategyConfig& {
    StrategyConfig c;
    c.family = f;
    c.granularity = g;
    c.seed = seed;
    return out.emplace_back(c);
  };
  for (auto g : {Granularity::section, Granularity::subsection, Granularity::sentence,
                 Granularity::proposition}) {
    add(Family::flat, g);
  }
  for (auto [w, o] : {std::pair<std::size_t, std::size_t>{256, 64}, {128, 32}, {64, 16},
                      {32, 8}, {16, 4}}) {
    auto& c = add(Family::fixed, Granularity::sentence);
    c.window_tokens = w;
    c.overlap_tokens = o;
  }
  for (auto f : {Family::contextual, Family::semantic, Family::lumber, Family::raptor}) {
    for (auto g : {Granularity::subsection, Granularity::sentence, Granularity::proposition}) {
      add(f, g);
    }
  }
  return out;
}

}  // namespace chunkbench
