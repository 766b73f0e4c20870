#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace chunkbench {

/// Content-addressed store for provider results.
///
/// Keys are SHA-256 digests of (operation, model, canonical input). With a
/// directory, each entry lives in `<dir>/<operation>/<key[0:2]>/<key>.json`
/// and survives restarts; without one the cache is process-local. Entries
/// are written atomically (temp file + rename).
class ResultCache {
 public:
  /// Exclusive hold on one key: an in-process mutex plus an advisory file
  /// lock when the cache is on disk.
  class KeyLock {
   public:
    KeyLock(KeyLock&&) noexcept;
    KeyLock& operator=(KeyLock&&) noexcept;
    KeyLock(const KeyLock&) = delete;
    KeyLock& operator=(const KeyLock&) = delete;
    ~KeyLock();

   private:
    friend class ResultCache;
    KeyLock(std::shared_ptr<std::mutex> mutex, int fd);
    void release();

    std::shared_ptr<std::mutex> mutex_;
    int fd_ = -1;
  };

  explicit ResultCache(std::filesystem::path dir = {});

  static std::string make_key(std::string_view operation, std::string_view model,
                              std::string_view canonical_input);

  std::optional<nlohmann::json> get(std::string_view operation, const std::string& key);
  void put(std::string_view operation, const std::string& key,
           const nlohmann::json& value);

  KeyLock lock(std::string_view operation, const std::string& key);

  std::filesystem::path entry_path(std::string_view operation,
                                   const std::string& key) const;
  bool persistent() const { return !dir_.empty(); }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::unordered_map<std::string, nlohmann::json> memory_;
  std::unordered_map<std::string, std::shared_ptr<std::mutex>> key_mutexes_;
};

}  // namespace chunkbench
