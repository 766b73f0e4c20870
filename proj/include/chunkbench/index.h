#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "chunkbench/hashing.h"
#include "chunkbench/strategies.h"

namespace chunkbench {

struct UnitMetadata {
  std::string chunk_id;
  std::vector<std::string> parent_section_ids;

  bool operator==(const UnitMetadata&) const = default;
};

/// Row-major float32 vectors with per-row metadata. Rows are unit length.
/// Append-only until finalize(); read-only and thread-safe afterwards.
class VectorIndex {
 public:
  VectorIndex() = default;
  VectorIndex(std::size_t dim, std::string strategy_tag);

  /// Throws DimensionMismatch on a wrong-sized row, ConfigError if the row
  /// is not unit length (tolerance 1e-3) or the index is finalized.
  void add(std::span<const float> vector, UnitMetadata metadata);
  void finalize() { finalized_ = true; }

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return metadata_.size(); }
  bool finalized() const { return finalized_; }
  const std::string& strategy_tag() const { return strategy_tag_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const { return data_; }
  const UnitMetadata& metadata(std::size_t i) const { return metadata_[i]; }
  const std::vector<UnitMetadata>& all_metadata() const { return metadata_; }

  bool operator==(const VectorIndex&) const = default;

 private:
  std::size_t dim_ = 0;
  std::string strategy_tag_;
  std::vector<float> data_;
  std::vector<UnitMetadata> metadata_;
  bool finalized_ = false;
};

/// Finalized index over the given units. `dim` is only consulted when
/// `units` is empty.
VectorIndex make_index(std::span<const IndexedUnit> units, const std::string& strategy_tag,
                       std::size_t dim = 0);

struct ScoredRow {
  std::size_t row = 0;
  double score = 0.0;

  bool operator==(const ScoredRow&) const = default;
};

/// Counts inner products computed by a search.
struct SearchStats {
  std::size_t scored = 0;
};

/// Exact maximum inner-product search: descending score, ties by ascending
/// row, min(k, count) results.
std::vector<ScoredRow> search_topk(const VectorIndex& index, std::span<const float> query,
                                   std::size_t k, SearchStats* stats = nullptr);

struct RaptorIndexNode {
  std::uint16_t level = 0;
  std::vector<std::uint32_t> children;
  Sha256Digest summary_sha256{};  // zero for leaves

  bool operator==(const RaptorIndexNode&) const = default;
};

/// A RAPTOR tree as a searchable structure. Every node has one row in
/// `vectors` (leaves first, so leaf i is row i); `nodes` and
/// `level_offsets` give the hierarchy.
struct RaptorIndex {
  VectorIndex vectors;
  std::vector<RaptorIndexNode> nodes;
  std::vector<std::size_t> level_offsets;

  std::size_t leaf_count() const { return level_offsets.size() < 2 ? 0 : level_offsets[1]; }
  std::size_t level_count() const {
    return level_offsets.empty() ? 0 : level_offsets.size() - 1;
  }

  bool operator==(const RaptorIndex&) const = default;
};

RaptorIndex make_raptor_index(const RaptorTree& tree, const std::string& strategy_tag);

/// Strict beam descent: score the top level, keep the `beam` best nodes,
/// score only their children, and so on down to the leaves, of which the
/// best `k_leaves` are returned (rows are leaf indices). Throws ConfigError
/// on an empty tree or beam 0.
std::vector<ScoredRow> traverse_raptor(const RaptorIndex& index, std::span<const float> query,
                                       std::size_t beam, std::size_t k_leaves,
                                       SearchStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Persistence
//
//   "SCIX" | u16 version | u32 dim | u64 count | count*dim f32 | metadata block
//
// All integers and floats little-endian. Metadata block: u64 length of the
// rest of the block, u16 tag length + tag, then per row u32 id length + id,
// u32 parent count, and per parent u16 length + id. Version 2 files (RAPTOR)
// append a node table: u64 length of the rest of the table, u32 level count,
// level_count + 1 u64 level offsets, then per node u16 level, u32 child
// count, u32 child indices and 32 bytes of summary SHA-256.

inline constexpr std::uint16_t kIndexVersion = 1;
inline constexpr std::uint16_t kRaptorIndexVersion = 2;
inline constexpr std::uint64_t kIndexHeaderBytes = 4 + 2 + 4 + 8;

/// Writes the index and returns the number of bytes persisted.
std::uint64_t save_index(const VectorIndex& index, const std::filesystem::path& path);
std::uint64_t save_index(const RaptorIndex& index, const std::filesystem::path& path);

/// Loads a version 1 or 2 file as a flat index (a RAPTOR node table is
/// validated and skipped). Throws FormatError on a bad magic or version,
/// CorruptionError on truncation or inconsistent lengths.
VectorIndex load_index(const std::filesystem::path& path);
RaptorIndex load_raptor_index(const std::filesystem::path& path);

/// Version stored in an index file header.
std::uint16_t index_file_version(const std::filesystem::path& path);

}  // namespace chunkbench
