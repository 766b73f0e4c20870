#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "chunkbench/error.h"
#include "chunkbench/index.h"

namespace chunkbench {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'I', 'X'};

class Writer {
 public:
  template <class T>
  void put(T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t b = 0; b < sizeof(T); ++b) {
      buf_.push_back(static_cast<char>((value >> (8 * b)) & 0xFF));
    }
  }

  void put_f32(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      const auto* p = reinterpret_cast<const char*>(values.data());
      buf_.append(p, values.size() * sizeof(float));
    } else {
      for (float f : values) put(std::bit_cast<std::uint32_t>(f));
    }
  }

  void put_bytes(std::string_view s) { buf_.append(s); }

  template <class Len>
  void put_string(std::string_view s) {
    if (s.size() > std::numeric_limits<Len>::max()) {
      throw ConfigError("string too long for the index format: " + std::string(s.substr(0, 40)));
    }
    put(static_cast<Len>(s.size()));
    buf_.append(s);
  }

  std::size_t size() const { return buf_.size(); }
  std::string& buffer() { return buf_; }

  // Writes the u64 length of everything appended after `mark`, at `mark`.
  void patch_length(std::size_t mark) {
    std::uint64_t len = buf_.size() - mark - 8;
    for (std::size_t b = 0; b < 8; ++b) buf_[mark + b] = static_cast<char>((len >> (8 * b)) & 0xFF);
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) {
      v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    }
    pos_ += sizeof(T);
    return v;
  }

  void get_f32(std::vector<float>& out, std::size_t n) {
    if (n > (data_.size() - pos_) / sizeof(float)) corrupt("vector block is truncated");
    out.resize(n);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), data_.data() + pos_, n * sizeof(float));
      pos_ += n * sizeof(float);
    } else {
      for (auto& f : out) f = std::bit_cast<float>(get<std::uint32_t>());
    }
  }

  template <class Len>
  std::string get_string() {
    auto len = get<Len>();
    need(len);
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  std::string get_raw(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  [[noreturn]] void corrupt(const std::string& what) const {
    throw CorruptionError(name_ + ": " + what + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) corrupt("unexpected end of file");
  }

  std::string data_;
  std::string name_;
  std::size_t pos_ = 0;
};

void write_vectors(Writer& w, const VectorIndex& index, std::uint16_t version) {
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint16_t>(version);
  if (index.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("index dimension too large for the index format");
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.dim()));
  w.put<std::uint64_t>(index.count());
  w.put_f32(index.data());

  const std::size_t mark = w.size();
  w.put<std::uint64_t>(0);
  w.put_string<std::uint16_t>(index.strategy_tag());
  for (const auto& m : index.all_metadata()) {
    w.put_string<std::uint32_t>(m.chunk_id);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.parent_section_ids.size()));
    for (const auto& p : m.parent_section_ids) w.put_string<std::uint16_t>(p);
  }
  w.patch_length(mark);
}

std::uint64_t commit(Writer& w, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.size()));
    if (!out) throw Error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
  return std::filesystem::file_size(path);
}

Reader open_reader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read index file " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Reader(std::move(data), path.string());
}

std::uint16_t read_header_version(Reader& r, const std::filesystem::path& path) {
  if (r.remaining() < 4) throw FormatError(path.string() + ": not an index file");
  if (r.get_raw(4) != std::string_view(kMagic, 4)) {
    throw FormatError(path.string() + ": bad magic number");
  }
  if (r.remaining() < 2) r.corrupt("truncated header");
  auto version = r.get<std::uint16_t>();
  if (version != kIndexVersion && version != kRaptorIndexVersion) {
    throw FormatError(path.string() + ": unsupported index version " + std::to_string(version));
  }
  return version;
}

VectorIndex read_vectors(Reader& r) {
  const auto dim = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  if (dim == 0) r.corrupt("zero dimension");
  if (count > r.remaining() / (static_cast<std::uint64_t>(dim) * sizeof(float))) {
    r.corrupt("vector block is truncated");
  }
  std::vector<float> data;
  r.get_f32(data, static_cast<std::size_t>(count) * dim);

  const auto block_len = r.get<std::uint64_t>();
  if (block_len > r.remaining()) r.corrupt("metadata block is truncated");
  const std::size_t block_end = r.pos() + block_len;
  VectorIndex index(dim, r.get_string<std::uint16_t>());
  for (std::uint64_t i = 0; i < count; ++i) {
    UnitMetadata m;
    m.chunk_id = r.get_string<std::uint32_t>();
    const auto parents = r.get<std::uint32_t>();
    for (std::uint32_t p = 0; p < parents; ++p) {
      m.parent_section_ids.push_back(r.get_string<std::uint16_t>());
    }
    try {
      index.add(std::span<const float>(data.data() + i * dim, dim), std::move(m));
    } catch (const ConfigError& e) {
      r.corrupt(std::string("invalid row: ") + e.what());
    }
  }
  if (r.pos() != block_end) r.corrupt("metadata block length mismatch");
  index.finalize();
  return index;
}

}  // namespace

std::uint64_t save_index(const VectorIndex& index, const std::filesystem::path& path) {
  Writer w;
  write_vectors(w, index, kIndexVersion);
  return commit(w, path);
}

std::uint64_t save_index(const RaptorIndex& index, const std::filesystem::path& path) {
  Writer w;
  write_vectors(w, index.vectors, kRaptorIndexVersion);
  const std::size_t mark = w.size();
  w.put<std::uint64_t>(0);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.level_count()));
  for (auto off : index.level_offsets) w.put<std::uint64_t>(off);
  for (const auto& node : index.nodes) {
    w.put<std::uint16_t>(node.level);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(node.children.size()));
    for (auto c : node.children) w.put<std::uint32_t>(c);
    w.put_bytes(std::string_view(reinterpret_cast<const char*>(node.summary_sha256.data()),
                                 node.summary_sha256.size()));
  }
  w.patch_length(mark);
  return commit(w, path);
}

namespace {

RaptorIndex read_raptor(Reader& r, VectorIndex vectors) {
  RaptorIndex index;
  index.vectors = std::move(vectors);
  const auto table_len = r.get<std::uint64_t>();
  if (table_len != r.remaining()) r.corrupt("node table length mismatch");
  const auto levels = r.get<std::uint32_t>();
  if (levels == 0 || levels > index.vectors.count() + 1) r.corrupt("bad level count");
  std::size_t prev = 0;
  for (std::uint32_t l = 0; l <= levels; ++l) {
    auto off = r.get<std::uint64_t>();
    if (off < prev || off > index.vectors.count()) r.corrupt("bad level offset");
    index.level_offsets.push_back(static_cast<std::size_t>(off));
    prev = static_cast<std::size_t>(off);
  }
  if (index.level_offsets.front() != 0 || index.level_offsets.back() != index.vectors.count()) {
    r.corrupt("level offsets do not cover the nodes");
  }
  for (std::size_t i = 0; i < index.vectors.count(); ++i) {
    RaptorIndexNode node;
    node.level = r.get<std::uint16_t>();
    const auto children = r.get<std::uint32_t>();
    for (std::uint32_t c = 0; c < children; ++c) {
      auto child = r.get<std::uint32_t>();
      if (child >= index.vectors.count()) r.corrupt("child reference out of range");
      node.children.push_back(child);
    }
    auto digest = r.get_raw(node.summary_sha256.size());
    std::memcpy(node.summary_sha256.data(), digest.data(), digest.size());
    index.nodes.push_back(std::move(node));
  }
  if (r.remaining() != 0) r.corrupt("trailing bytes");
  return index;
}

}  // namespace

VectorIndex load_index(const std::filesystem::path& path) {
  auto r = open_reader(path);
  const auto version = read_header_version(r, path);
  auto index = read_vectors(r);
  if (version == kRaptorIndexVersion) {
    read_raptor(r, index);
  } else if (r.remaining() != 0) {
    r.corrupt("trailing bytes");
  }
  return index;
}

RaptorIndex load_raptor_index(const std::filesystem::path& path) {
  auto r = open_reader(path);
  const auto version = read_header_version(r, path);
  if (version != kRaptorIndexVersion) {
    throw FormatError(path.string() + ": not a RAPTOR index (version " + std::to_string(version) +
                      ")");
  }
  auto vectors = read_vectors(r);
  return read_raptor(r, std::move(vectors));
}

std::uint16_t index_file_version(const std::filesystem::path& path) {
  auto r = open_reader(path);
  return read_header_version(r, path);
}

}  // namespace chunkbench
