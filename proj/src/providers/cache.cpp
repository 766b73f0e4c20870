#include "chunkbench/cache.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <random>
#include <sstream>

#include "chunkbench/error.h"
#include "chunkbench/hashing.h"

namespace chunkbench {

namespace fs = std::filesystem;

ResultCache::KeyLock::KeyLock(std::shared_ptr<std::mutex> mutex, int fd)
    : mutex_(std::move(mutex)), fd_(fd) {}

ResultCache::KeyLock::KeyLock(KeyLock&& other) noexcept
    : mutex_(std::move(other.mutex_)), fd_(other.fd_) {
  other.fd_ = -1;
}

ResultCache::KeyLock& ResultCache::KeyLock::operator=(KeyLock&& other) noexcept {
  if (this != &other) {
    release();
    mutex_ = std::move(other.mutex_);
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

ResultCache::KeyLock::~KeyLock() { release(); }

void ResultCache::KeyLock::release() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
    fd_ = -1;
  }
  if (mutex_) {
    mutex_->unlock();
    mutex_.reset();
  }
}

ResultCache::ResultCache(fs::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) fs::create_directories(dir_);
}

std::string ResultCache::make_key(std::string_view operation, std::string_view model,
                                  std::string_view canonical_input) {
  std::string material;
  material.reserve(operation.size() + model.size() + canonical_input.size() + 2);
  material.append(operation).push_back('\n');
  material.append(model).push_back('\n');
  material.append(canonical_input);
  return sha256_hex(material);
}

fs::path ResultCache::entry_path(std::string_view operation, const std::string& key) const {
  return dir_ / std::string(operation) / key.substr(0, 2) / (key + ".json");
}

std::optional<nlohmann::json> ResultCache::get(std::string_view operation,
                                               const std::string& key) {
  const std::string mem_key = std::string(operation) + "/" + key;
  {
    std::lock_guard lk(mutex_);
    if (auto it = memory_.find(mem_key); it != memory_.end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  auto path = entry_path(operation, key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  nlohmann::json entry;
  try {
    in >> entry;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;  // partial or foreign file: recompute
  }
  if (!entry.is_object() || !entry.contains("value")) return std::nullopt;
  std::lock_guard lk(mutex_);
  return memory_.emplace(mem_key, entry["value"]).first->second;
}

void ResultCache::put(std::string_view operation, const std::string& key,
                      const nlohmann::json& value) {
  {
    std::lock_guard lk(mutex_);
    memory_[std::string(operation) + "/" + key] = value;
  }
  if (dir_.empty()) return;
  auto path = entry_path(operation, key);
  fs::create_directories(path.parent_path());
  nlohmann::json entry{{"operation", operation}, {"key", key}, {"value", value}};
  std::ostringstream tmp_name;
  tmp_name << path.string() << ".tmp." << ::getpid() << "." << std::random_device{}();
  {
    std::ofstream out(tmp_name.str(), std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache entry " + tmp_name.str());
    out << entry.dump();
    if (!out) throw Error("cannot write cache entry " + tmp_name.str());
  }
  fs::rename(tmp_name.str(), path);
}

ResultCache::KeyLock ResultCache::lock(std::string_view operation, const std::string& key) {
  std::shared_ptr<std::mutex> m;
  {
    std::lock_guard lk(mutex_);
    auto& slot = key_mutexes_[std::string(operation) + "/" + key];
    if (!slot) slot = std::make_shared<std::mutex>();
    m = slot;
  }
  m->lock();
  int fd = -1;
  if (!dir_.empty()) {
    auto path = entry_path(operation, key);
    fs::create_directories(path.parent_path());
    auto lock_path = path.string() + ".lock";
    fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd >= 0 && ::flock(fd, LOCK_EX) != 0) {
      ::close(fd);
      fd = -1;
    }
  }
  return KeyLock(std::move(m), fd);
}

}  // namespace chunkbench
