#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chunkbench {

/// Root of every error the toolkit throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed corpus input. Carries the 1-based line and byte offset of the
/// offending input when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t offset)
      : Error(what + " (line " + std::to_string(line) + ", offset " +
              std::to_string(offset) + ")"),
        line_(line),
        offset_(offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t offset_;
};

class DuplicateIdError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpusError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: bad strategy parameters, dimension mismatches
/// against cached vectors, missing endpoints.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A remote provider kept failing after all retries. [begin, end) is the
/// range of inputs of the failed batch.
class ProviderUnavailable : public Error {
 public:
  ProviderUnavailable(const std::string& what, std::size_t begin,
                      std::size_t end)
      : Error(what), begin_(begin), end_(end) {}

  std::size_t batch_begin() const noexcept { return begin_; }
  std::size_t batch_end() const noexcept { return end_; }

 private:
  std::size_t begin_;
  std::size_t end_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Index file with a bad magic number or unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Index file that is truncated or internally inconsistent.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Invalid evaluation data (QA records, score matrices).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace chunkbench
