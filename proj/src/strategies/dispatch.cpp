#include <spdlog/spdlog.h>

#include "chunkbench/error.h"
#include "chunkbench/hashing.h"
#include "chunkbench/strategies.h"

namespace chunkbench {

BuildOutput build_strategy(const StrategyConfig& config, const Corpus& corpus,
                           std::span<const BaseUnit> propositions, EmbeddingService& embedder,
                           GenerationService& generator, std::size_t workers) {
  config.validate();
  BuildOutput out;
  out.strategy_tag = config.tag();
  if (config.family == Family::fixed) {
    out.indexed = build_fixed(corpus, *config.window_tokens, *config.overlap_tokens, embedder);
    return out;
  }

  out.units = base_units(corpus, config.granularity, propositions);
  switch (config.family) {
    case Family::flat:
      out.indexed = build_flat(out.units, embedder, out.strategy_tag);
      break;
    case Family::contextual:
      out.indexed = build_contextual(out.units, corpus, generator, embedder, workers);
      break;
    case Family::semantic: {
      const std::size_t k = config.clusters_for(out.units.size());
      spdlog::info("{}: clustering {} units into {} clusters", out.strategy_tag,
                   out.units.size(), k);
      out.indexed = build_semantic(out.units, corpus, embedder, k,
                                   derive_seed(config.seed, "semantic/" + config.slug()));
      break;
    }
    case Family::lumber:
      out.indexed = build_lumber(out.units, corpus, config.lumber_budget(), generator, embedder);
      break;
    case Family::raptor:
      out.tree = build_raptor(out.units, embedder, generator, config.reduction(),
                              derive_seed(config.seed, "raptor/" + config.slug()), workers);
      out.indexed = raptor_leaves(*out.tree, out.units, out.strategy_tag);
      break;
    case Family::fixed:
      break;
  }
  for (auto& u : out.indexed) u.strategy_tag = out.strategy_tag;
  return out;
}

}  // namespace chunkbench
