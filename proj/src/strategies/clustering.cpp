#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "chunkbench/error.h"
#include "chunkbench/hashing.h"
#include "chunkbench/strategies.h"
#include "chunkbench/text.h"
#include "parallel.h"

namespace chunkbench {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kShiftTolerance = 1e-4;

using Point = std::vector<double>;

double squared_distance(std::span<const float> x, const Point& c) {
  double s = 0.0;
  for (std::size_t d = 0; d < c.size(); ++d) {
    const double diff = static_cast<double>(x[d]) - c[d];
    s += diff * diff;
  }
  return s;
}

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

Point to_point(std::span<const float> v) { return Point(v.begin(), v.end()); }

bool normalize(Point& p) {
  double n = 0.0;
  for (double x : p) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0 || !std::isfinite(n)) return false;
  for (double& x : p) x /= n;
  return true;
}

// k-means++ seeding: each further center is drawn with probability
// proportional to its squared distance from the nearest chosen center.
std::vector<Point> seed_centers(std::span<const EmbeddingVector> xs, std::size_t k,
                                SplitMix64& rng) {
  const std::size_t n = xs.size();
  std::vector<Point> centers;
  centers.push_back(to_point(xs[uniform_index(rng, n)].values));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(xs[i].values, centers[0]);

  while (centers.size() < k) {
    double total = 0.0;
    for (double d : nearest) total += d;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= nearest[i];
        if (target < 0.0 && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave target >= 0 after the loop; take the last candidate.
      if (target >= 0.0) {
        for (std::size_t i = n; i-- > 0;) {
          if (nearest[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      pick = uniform_index(rng, n);  // all points coincide with centers
    }
    centers.push_back(to_point(xs[pick].values));
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(xs[i].values, centers.back()));
    }
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(std::span<const EmbeddingVector> vectors, std::size_t k,
                    std::uint64_t seed) {
  const std::size_t n = vectors.size();
  if (k == 0 || k > n) {
    throw ConfigError("kmeans needs 1 <= k <= n (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
  }
  const std::size_t dim = vectors.front().dim();
  for (const auto& v : vectors) {
    if (v.dim() != dim) throw DimensionMismatch("kmeans: vectors of different dimensions");
  }

  SplitMix64 rng(seed);
  std::vector<Point> centers = seed_centers(vectors, k, rng);
  std::vector<std::size_t> assign(n, 0);
  std::vector<double> dist(n, 0.0);
  KMeansResult result;

  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    result.iterations = iter;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(vectors[i].values, centers[c]);
        if (d < best) {
          best = d;
          assign[i] = c;
        }
      }
      dist[i] = best;
    }

    // Reseed empty clusters with the farthest point of a multi-member cluster.
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assign) ++sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assign[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      }
      --sizes[assign[far]];
      assign[far] = c;
      sizes[c] = 1;
      dist[far] = 0.0;
      centers[c] = to_point(vectors[far].values);
    }

    std::vector<Point> next(k, Point(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      auto& acc = next[assign[i]];
      for (std::size_t d = 0; d < dim; ++d) acc[d] += vectors[i].values[d];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (double& x : next[c]) x /= static_cast<double>(sizes[c]);
      if (!normalize(next[c])) next[c] = centers[c];  // members cancel out
      shift = std::max(shift, std::sqrt(squared_distance(next[c], centers[c])));
    }
    centers = std::move(next);
    if (shift < kShiftTolerance) break;
  }

  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia += squared_distance(vectors[i].values, centers[assign[i]]);
  }
  result.assignments = std::move(assign);
  for (auto& c : centers) {
    result.centroids.push_back(EmbeddingVector{std::vector<float>(c.begin(), c.end())});
  }
  return result;
}

namespace {

// Cluster member lists renumbered by first appearance, so cluster order
// follows the unit stream.
std::vector<std::vector<std::size_t>> clusters_in_stream_order(
    const std::vector<std::size_t>& assignments, std::size_t k) {
  std::vector<std::size_t> rank(k, k);
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    auto& r = rank[assignments[i]];
    if (r == k) {
      r = clusters.size();
      clusters.emplace_back();
    }
    clusters[r].push_back(i);
  }
  return clusters;
}

EmbeddingVector pooled(std::span<const EmbeddingVector> vectors,
                       const std::vector<std::size_t>& members) {
  Point acc(vectors[members.front()].dim(), 0.0);
  for (auto m : members) {
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += vectors[m].values[d];
  }
  for (double& x : acc) x /= static_cast<double>(members.size());
  if (!normalize(acc)) acc = to_point(vectors[members.front()].values);
  return EmbeddingVector{std::vector<float>(acc.begin(), acc.end())};
}

}  // namespace

std::vector<IndexedUnit> build_semantic(std::span<const BaseUnit> units, const Corpus& corpus,
                                        EmbeddingService& embedder, std::size_t k,
                                        std::uint64_t seed) {
  if (units.empty()) return {};
  std::vector<std::string> texts;
  texts.reserve(units.size());
  for (const auto& u : units) texts.push_back(u.text);
  const auto vectors = embedder.embed_batch(texts);
  const auto km = kmeans(vectors, k, seed);
  const SectionOrder order(corpus);
  const std::string tag = "Semantic " + std::string(display_label(units.front().granularity));

  std::vector<IndexedUnit> out;
  for (auto& members : clusters_in_stream_order(km.assignments, k)) {
    std::vector<std::string> parts;
    for (auto m : members) parts.push_back(units[m].text);
    out.push_back(IndexedUnit{"cluster:" + std::to_string(out.size()), pooled(vectors, members),
                              ordered_parents(units, members, order), text::join(parts, "\n"),
                              tag, std::move(members), 0, 0});
  }
  return out;
}

RaptorTree build_raptor(std::span<const BaseUnit> units, EmbeddingService& embedder,
                        GenerationService& generator, std::size_t reduction,
                        std::uint64_t seed, std::size_t workers) {
  if (units.empty()) throw ConfigError("RAPTOR needs at least one base unit");
  if (reduction < 2) throw ConfigError("RAPTOR needs a reduction factor >= 2");

  // Units arrive in corpus order; a section's first unit fixes its rank.
  std::unordered_map<std::string, std::size_t> first_unit;
  for (std::size_t i = 0; i < units.size(); ++i) first_unit.try_emplace(units[i].parent_section_id, i);

  RaptorTree tree;
  std::vector<std::string> texts;
  for (const auto& u : units) texts.push_back(u.text);
  auto leaf_vectors = embedder.embed_batch(texts);
  tree.level_offsets.push_back(0);
  for (std::size_t i = 0; i < units.size(); ++i) {
    tree.nodes.push_back(RaptorNode{units[i].unit_id, 0, std::move(leaf_vectors[i]), {}, i, {},
                                    {units[i].parent_section_id}});
  }
  tree.level_offsets.push_back(tree.nodes.size());

  for (int level = 1;; ++level) {
    const std::size_t begin = tree.level_offsets[level - 1];
    const std::size_t end = tree.level_offsets[level];
    const std::size_t count = end - begin;
    if (count <= reduction) break;

    const std::size_t k = std::max<std::size_t>(1, (count + reduction - 1) / reduction);
    std::vector<EmbeddingVector> level_vectors;
    for (std::size_t i = begin; i < end; ++i) level_vectors.push_back(tree.nodes[i].vector);
    const auto km =
        kmeans(level_vectors, k, derive_seed(seed, "raptor/level-" + std::to_string(level)));
    auto clusters = clusters_in_stream_order(km.assignments, k);

    std::vector<std::string> summaries(clusters.size());
    detail::parallel_for(clusters.size(), workers, [&](std::size_t c) {
      std::vector<std::string> member_texts;
      for (auto m : clusters[c]) {
        const auto& node = tree.nodes[begin + m];
        member_texts.push_back(node.leaf_unit ? units[*node.leaf_unit].text : node.summary_text);
      }
      summaries[c] = generator.summarize_cluster(member_texts);
    });
    auto vectors = embedder.embed_batch(summaries);

    for (std::size_t c = 0; c < clusters.size(); ++c) {
      RaptorNode node;
      node.node_id = "L" + std::to_string(level) + "." + std::to_string(c);
      node.level = level;
      node.vector = std::move(vectors[c]);
      node.summary_text = std::move(summaries[c]);
      for (auto m : clusters[c]) {
        node.children.push_back(begin + m);
        for (const auto& p : tree.nodes[begin + m].parent_section_ids) {
          node.parent_section_ids.push_back(p);
        }
      }
      auto& parents = node.parent_section_ids;
      std::sort(parents.begin(), parents.end(), [&](const std::string& a, const std::string& b) {
        return first_unit.at(a) < first_unit.at(b);
      });
      parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
      tree.nodes.push_back(std::move(node));
    }
    tree.level_offsets.push_back(tree.nodes.size());
  }
  return tree;
}

std::vector<IndexedUnit> raptor_leaves(const RaptorTree& tree, std::span<const BaseUnit> units,
                                       const std::string& strategy_tag) {
  std::vector<IndexedUnit> out;
  for (std::size_t i = 0; i < tree.level_offsets.at(1); ++i) {
    const auto& node = tree.nodes[i];
    const auto& u = units[*node.leaf_unit];
    out.push_back(IndexedUnit{node.node_id, node.vector, node.parent_section_ids, u.text,
                              strategy_tag, {*node.leaf_unit}, 0, 0});
  }
  return out;
}

}  // namespace chunkbench
