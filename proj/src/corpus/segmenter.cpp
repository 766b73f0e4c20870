#include <algorithm>
#include <cctype>

#include "chunkbench/corpus.h"
#include "chunkbench/text.h"

namespace chunkbench {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
  });
}

// Digits with an optional lowercase letter suffix ("13", "566a").
bool is_citation_number(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == 0) return false;
  while (i < s.size() && std::islower(static_cast<unsigned char>(s[i]))) ++i;
  return i == s.size();
}

// Whitespace-delimited token that ends right before `end`.
std::string_view token_before(std::string_view s, std::size_t end) {
  std::size_t b = end;
  while (b > 0 && !is_space(s[b - 1])) --b;
  return s.substr(b, end - b);
}

// The period at `pos` must not end a sentence.
bool protected_period(std::string_view s, std::size_t pos,
                      const SegmenterConfig& config) {
  // Any period inside an abbreviation occurrence, including the inner ones
  // of "i. S. d." or "z. B.".
  for (const auto& abbr : config.abbreviations) {
    if (abbr.empty() || abbr.back() != '.') continue;
    for (std::size_t k = 0; k < abbr.size(); ++k) {
      if (abbr[k] != '.' || k > pos) continue;
      const std::size_t b = pos - k;
      if (s.substr(b, abbr.size()) != abbr) continue;
      if (b == 0 || is_space(s[b - 1]) || s[b - 1] == '(') return true;
    }
  }

  std::string_view tok = token_before(s, pos);
  if (config.protect_single_digits && tok.size() == 1 && all_digits(tok)) {
    return true;
  }
  if (is_citation_number(tok)) {
    std::size_t tok_start = pos - tok.size();
    std::size_t e = tok_start;
    while (e > 0 && is_space(s[e - 1])) --e;
    if (e < tok_start) {
      std::string_view prev = token_before(s, e);
      for (const auto& abbr : config.abbreviations) {
        if (!abbr.empty() && abbr.back() != '.' && prev == abbr) return true;
      }
    }
  }
  return false;
}

}  // namespace

SegmenterConfig SegmenterConfig::defaults() {
  SegmenterConfig c;
  c.abbreviations = {"Abs.", "Nr.",   "S.",   "Satz",     "z. B.",
                     "z.B.", "bzw.",  "ggf.", "i. S. d.", "i.S.d.",
                     "vgl.", "§",     "§§"};
  c.protect_single_digits = true;
  return c;
}

std::vector<std::string> segment_sentences(std::string_view input,
                                           const SegmenterConfig& config) {
  std::vector<std::string> out;
  std::string_view s = text::trim(input);
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    if (j >= s.size() || !is_space(s[j])) continue;
    while (j < s.size() && is_space(s[j])) ++j;
    if (j >= s.size()) continue;
    if (!text::is_upper_at(s, j) && s[j] != '(') continue;
    if (c == '.' && protected_period(s, i, config)) continue;

    auto piece = text::normalize_whitespace(s.substr(start, i + 1 - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    start = j;
    i = j - 1;
  }
  auto rest = text::normalize_whitespace(s.substr(start));
  if (!rest.empty()) out.push_back(std::move(rest));
  return out;
}

}  // namespace chunkbench
