#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <exception>
#include <string>
#include <thread>

#include <spdlog/spdlog.h>

#include "chunkbench/error.h"
#include "chunkbench/providers.h"

namespace chunkbench::detail {

/// Runs `call` up to 1 + max_retries times with exponential backoff.
/// Configuration errors are not retried. Persistent failure surfaces as
/// ProviderUnavailable carrying the [begin, end) input range.
template <class Fn>
auto with_retries(const ProviderConfig& config, std::size_t begin, std::size_t end,
                  Fn&& call) -> decltype(call()) {
  std::string last_error;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    try {
      return call();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      last_error = e.what();
      if (attempt == config.max_retries) break;
      spdlog::warn("provider {} failed (attempt {}/{}): {}", config.model_name,
                   attempt + 1, config.max_retries + 1, last_error);
      if (config.backoff_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            static_cast<long long>(config.backoff_ms) << std::min(attempt, 16)));
      }
    }
  }
  throw ProviderUnavailable("provider " + config.model_name + " unavailable for inputs [" +
                                std::to_string(begin) + ", " + std::to_string(end) +
                                "): " + last_error,
                            begin, end);
}

}  // namespace chunkbench::detail
