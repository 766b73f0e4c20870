#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace chunkbench::text {

std::string_view trim(std::string_view s);

/// Collapses every whitespace run to one space and trims both ends.
std::string normalize_whitespace(std::string_view s);

std::vector<std::string_view> split_whitespace(std::string_view s);

/// Token count used everywhere in the toolkit: whitespace-delimited words.
std::size_t count_tokens(std::string_view s);

/// Keeps at most `max_tokens` whitespace tokens, joined by single spaces.
std::string truncate_tokens(std::string_view s, std::size_t max_tokens);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// ASCII and Latin-1 supplement (Ä, Ö, Ü, ...) lowercasing on UTF-8 input.
std::string to_lower(std::string_view s);

/// True if the UTF-8 code point starting at `pos` is an uppercase letter
/// (ASCII A-Z or the Latin-1 uppercase block).
bool is_upper_at(std::string_view s, std::size_t pos);

bool is_valid_utf8(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

}  // namespace chunkbench::text
