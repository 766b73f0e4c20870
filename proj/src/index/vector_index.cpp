#include <algorithm>
#include <cmath>

#include "chunkbench/error.h"
#include "chunkbench/index.h"

namespace chunkbench {

namespace {

constexpr double kNormTolerance = 1e-3;

double inner(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    s += static_cast<double>(a[d]) * static_cast<double>(b[d]);
  }
  return s;
}

bool ranks_before(const ScoredRow& a, const ScoredRow& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.row < b.row;
}

void keep_best(std::vector<ScoredRow>& rows, std::size_t k) {
  if (k < rows.size()) {
    std::nth_element(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end(),
                     ranks_before);
    rows.resize(k);
  }
  std::sort(rows.begin(), rows.end(), ranks_before);
}

void check_query(std::size_t dim, std::span<const float> query) {
  if (query.size() != dim) {
    throw DimensionMismatch("query has dimension " + std::to_string(query.size()) +
                            ", index has " + std::to_string(dim));
  }
}

}  // namespace

VectorIndex::VectorIndex(std::size_t dim, std::string strategy_tag)
    : dim_(dim), strategy_tag_(std::move(strategy_tag)) {
  if (dim_ == 0) throw ConfigError("index dimension must be positive");
}

void VectorIndex::add(std::span<const float> vector, UnitMetadata metadata) {
  if (finalized_) throw ConfigError("index is finalized");
  if (vector.size() != dim_) {
    throw DimensionMismatch("row has dimension " + std::to_string(vector.size()) +
                            ", index has " + std::to_string(dim_));
  }
  const double norm = std::sqrt(inner(vector, vector));
  if (std::abs(norm - 1.0) > kNormTolerance) {
    throw ConfigError("row " + metadata.chunk_id + " is not unit length (norm " +
                      std::to_string(norm) + ")");
  }
  if (metadata.parent_section_ids.empty()) {
    throw ConfigError("row " + metadata.chunk_id + " has no parent section");
  }
  data_.insert(data_.end(), vector.begin(), vector.end());
  metadata_.push_back(std::move(metadata));
}

VectorIndex make_index(std::span<const IndexedUnit> units, const std::string& strategy_tag,
                       std::size_t dim) {
  if (!units.empty()) dim = units.front().vector.dim();
  VectorIndex index(dim, strategy_tag);
  for (const auto& u : units) {
    index.add(u.vector.values, UnitMetadata{u.chunk_id, u.parent_section_ids});
  }
  index.finalize();
  return index;
}

std::vector<ScoredRow> search_topk(const VectorIndex& index, std::span<const float> query,
                                   std::size_t k, SearchStats* stats) {
  check_query(index.dim(), query);
  if (k == 0) throw ConfigError("search_topk needs k >= 1");
  std::vector<ScoredRow> rows(index.count());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = {i, inner(index.row(i), query)};
  if (stats) stats->scored += rows.size();
  keep_best(rows, k);
  return rows;
}

RaptorIndex make_raptor_index(const RaptorTree& tree, const std::string& strategy_tag) {
  if (tree.nodes.empty()) throw ConfigError("RAPTOR tree is empty");
  RaptorIndex index;
  index.vectors = VectorIndex(tree.nodes.front().vector.dim(), strategy_tag);
  for (const auto& node : tree.nodes) {
    index.vectors.add(node.vector.values, UnitMetadata{node.node_id, node.parent_section_ids});
    RaptorIndexNode n;
    n.level = static_cast<std::uint16_t>(node.level);
    for (auto c : node.children) n.children.push_back(static_cast<std::uint32_t>(c));
    if (node.level > 0) n.summary_sha256 = sha256(node.summary_text);
    index.nodes.push_back(std::move(n));
  }
  index.vectors.finalize();
  index.level_offsets = tree.level_offsets;
  return index;
}

std::vector<ScoredRow> traverse_raptor(const RaptorIndex& index, std::span<const float> query,
                                       std::size_t beam, std::size_t k_leaves,
                                       SearchStats* stats) {
  if (index.level_count() == 0 || index.leaf_count() == 0) {
    throw ConfigError("RAPTOR index is empty");
  }
  if (beam == 0) throw ConfigError("beam must be >= 1");
  if (k_leaves == 0) throw ConfigError("k_leaves must be >= 1");
  check_query(index.vectors.dim(), query);

  const std::size_t top = index.level_count() - 1;
  std::vector<std::size_t> frontier;
  for (std::size_t i = index.level_offsets[top]; i < index.level_offsets[top + 1]; ++i) {
    frontier.push_back(i);
  }
  for (std::size_t level = top;; --level) {
    std::vector<ScoredRow> scored;
    scored.reserve(frontier.size());
    for (auto node : frontier) scored.push_back({node, inner(index.vectors.row(node), query)});
    if (stats) stats->scored += scored.size();
    if (level == 0) {
      keep_best(scored, k_leaves);
      return scored;
    }
    keep_best(scored, beam);
    frontier.clear();
    for (const auto& s : scored) {
      for (auto child : index.nodes[s.row].children) frontier.push_back(child);
    }
  }
}

}  // namespace chunkbench
