#include <cctype>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "chunkbench/corpus.h"
#include "chunkbench/error.h"
#include "chunkbench/text.h"

namespace chunkbench {

using json = nlohmann::json;

namespace {

constexpr std::string_view kParagraph = "\xC2\xA7";  // "§"

// Line/column of a byte offset, for JSON parse errors.
std::size_t line_of(std::string_view raw, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < raw.size(); ++i) {
    if (raw[i] == '\n') ++line;
  }
  return line;
}

std::optional<std::string> clean_label(const json& v) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) throw ParseError("hierarchy label must be a string or null", 0, 0);
  auto t = text::trim(v.get_ref<const std::string&>());
  if (t.empty()) return std::nullopt;
  return std::string(t);
}

void number_sentences(Section& section) {
  int n = 0;
  for (auto& sub : section.subsections) {
    for (auto& s : sub.sentences) s.ordinal_in_section = ++n;
  }
}

Corpus parse_json(std::string_view raw, std::string_view fallback_name) {
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(),
                     line_of(raw, e.byte), e.byte);
  }
  if (!doc.is_object()) throw ParseError("corpus must be a JSON object", 1, 0);

  Corpus corpus;
  corpus.name = doc.contains("name") && doc["name"].is_string()
                    ? doc["name"].get<std::string>()
                    : std::string(fallback_name);
  if (!doc.contains("sections") || !doc["sections"].is_array()) {
    throw ParseError("corpus object lacks a \"sections\" array", 1, 0);
  }

  const auto& sections = doc["sections"];
  for (std::size_t si = 0; si < sections.size(); ++si) {
    const auto& js = sections[si];
    auto where = "section #" + std::to_string(si + 1);
    if (!js.is_object() || !js.contains("id") || !js["id"].is_string()) {
      throw ParseError(where + ": missing string \"id\"", 0, si + 1);
    }
    auto id = normalize_section_id(js["id"].get<std::string>());
    if (!id) {
      throw ParseError(where + ": malformed section id \"" +
                           js["id"].get<std::string>() + "\"",
                       0, si + 1);
    }
    Section sec;
    sec.section_id = *id;
    if (js.contains("heading") && js["heading"].is_string()) {
      sec.heading = std::string(text::trim(js["heading"].get<std::string>()));
    }
    if (js.contains("hierarchy") && js["hierarchy"].is_object()) {
      const auto& h = js["hierarchy"];
      auto get = [&](const char* key) -> std::optional<std::string> {
        return h.contains(key) ? clean_label(h[key]) : std::nullopt;
      };
      sec.hierarchy.book = get("book");
      sec.hierarchy.division = get("division");
      sec.hierarchy.title = get("title");
      sec.hierarchy.subtitle = get("subtitle");
    }
    if (!js.contains("subsections") || !js["subsections"].is_array()) {
      throw ParseError(where + ": missing \"subsections\" array", 0, si + 1);
    }
    for (const auto& jsub : js["subsections"]) {
      if (!jsub.is_object() || !jsub.contains("ordinal") ||
          !jsub["ordinal"].is_number_integer() || !jsub.contains("sentences") ||
          !jsub["sentences"].is_array()) {
        throw ParseError(where + ": subsection needs integer \"ordinal\" and "
                                 "\"sentences\" array",
                         0, si + 1);
      }
      Subsection sub;
      sub.ordinal = jsub["ordinal"].get<int>();
      for (const auto& jsent : jsub["sentences"]) {
        if (!jsent.is_string()) {
          throw ParseError(where + ": sentences must be strings", 0, si + 1);
        }
        sub.sentences.push_back(
            Sentence{0, text::normalize_whitespace(jsent.get<std::string>())});
      }
      sec.subsections.push_back(std::move(sub));
    }
    number_sentences(sec);
    corpus.sections.push_back(std::move(sec));
  }
  validate_corpus(corpus);
  return corpus;
}

struct PendingSection {
  Section section;
  std::size_t line = 0;
  std::size_t offset = 0;
  bool have_heading = false;
  bool saw_marker = false;
  std::string loose_text;  // body text before any "(n)" marker
  std::vector<std::pair<int, std::string>> blocks;
};

// "Book 2: Law of Obligations" -> level 0, label "Law of Obligations".
std::optional<std::pair<int, std::string>> hierarchy_line(std::string_view line) {
  static const std::pair<std::string_view, int> kLevels[] = {
      {"Book", 0},  {"Buch", 0},  {"Division", 1}, {"Abschnitt", 1},
      {"Title", 2}, {"Titel", 2}, {"Subtitle", 3}, {"Untertitel", 3}};
  for (const auto& [kw, level] : kLevels) {
    if (!text::starts_with(line, kw)) continue;
    std::string_view rest = line.substr(kw.size());
    if (rest.empty() || (rest[0] != ' ' && rest[0] != '\t')) continue;
    rest = text::trim(rest);
    std::size_t i = 0;
    while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
    if (i == 0) continue;
    std::string number(rest.substr(0, i));
    rest = rest.substr(i);
    if (!rest.empty() && (rest[0] == ':' || rest[0] == '.')) rest = rest.substr(1);
    else if (!rest.empty() && rest[0] != ' ' && rest[0] != '\t') continue;
    auto label = text::trim(rest);
    if (label.empty()) return std::pair{level, std::string(kw) + " " + number};
    return std::pair{level, std::string(label)};
  }
  return std::nullopt;
}

// "(3) text" -> {3, "text"}.
std::optional<std::pair<int, std::string_view>> subsection_marker(std::string_view line) {
  if (line.size() < 3 || line[0] != '(') return std::nullopt;
  std::size_t i = 1;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 1 || i >= line.size() || line[i] != ')' || i > 6) return std::nullopt;
  int n = std::stoi(std::string(line.substr(1, i - 1)));
  return std::pair{n, text::trim(line.substr(i + 1))};
}

void append_text(std::string& dst, std::string_view piece) {
  if (piece.empty()) return;
  if (!dst.empty()) dst.push_back(' ');
  dst.append(piece);
}

Section finish_section(PendingSection&& p, const SegmenterConfig& segmenter) {
  if (!p.have_heading) {
    throw ParseError("section " + p.section.section_id + " has no heading line",
                     p.line, p.offset);
  }
  if (!p.saw_marker) {
    if (p.loose_text.empty()) {
      throw ParseError("section " + p.section.section_id + " has no body text",
                       p.line, p.offset);
    }
    p.blocks.emplace_back(1, std::move(p.loose_text));
  }
  for (auto& [ordinal, body] : p.blocks) {
    auto sentences = segment_sentences(body, segmenter);
    if (sentences.empty()) {
      throw ParseError("section " + p.section.section_id + " subsection (" +
                           std::to_string(ordinal) + ") is empty",
                       p.line, p.offset);
    }
    Subsection sub;
    sub.ordinal = ordinal;
    for (auto& s : sentences) sub.sentences.push_back(Sentence{0, std::move(s)});
    p.section.subsections.push_back(std::move(sub));
  }
  number_sentences(p.section);
  return std::move(p.section);
}

Corpus parse_plain(std::string_view raw, std::string_view name,
                   const SegmenterConfig& segmenter) {
  Corpus corpus;
  corpus.name = std::string(name);
  HierarchyPath current;
  std::optional<PendingSection> pending;
  std::unordered_set<std::string> seen;

  auto flush = [&]() {
    if (!pending) return;
    auto sec = finish_section(std::move(*pending), segmenter);
    pending.reset();
    corpus.sections.push_back(std::move(sec));
  };

  std::size_t line_no = 0;
  std::size_t next = 0;
  while (next < raw.size()) {
    std::size_t nl = raw.find('\n', next);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string_view line = raw.substr(next, nl - next);
    const std::size_t line_offset = next;
    next = nl + 1;
    ++line_no;

    if (!text::is_valid_utf8(line)) {
      throw ParseError("invalid UTF-8", line_no, line_offset);
    }
    std::string_view t = text::trim(line);
    if (t.empty()) continue;

    if (text::starts_with(t, kParagraph) &&
        !text::starts_with(t.substr(kParagraph.size()), kParagraph)) {
      std::string_view rest = text::trim(t.substr(kParagraph.size()));
      std::size_t i = 0;
      while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
      std::size_t j = i;
      while (j < rest.size() && std::isalpha(static_cast<unsigned char>(rest[j]))) ++j;
      if (i == 0 || (j < rest.size() && rest[j] != ' ' && rest[j] != '\t')) {
        throw ParseError("malformed section header \"" + std::string(t) + "\"",
                         line_no, line_offset);
      }
      flush();
      auto id = normalize_section_id(rest.substr(0, j));
      if (!id) {
        throw ParseError("malformed section header \"" + std::string(t) + "\"",
                         line_no, line_offset);
      }
      if (!seen.insert(*id).second) {
        throw DuplicateIdError("duplicate section id " + *id + " at line " +
                               std::to_string(line_no));
      }
      pending.emplace();
      pending->section.section_id = *id;
      pending->section.hierarchy = current;
      pending->line = line_no;
      pending->offset = line_offset;
      auto heading = text::trim(rest.substr(j));
      if (!heading.empty()) {
        pending->section.heading = std::string(heading);
        pending->have_heading = true;
      }
      continue;
    }

    if (auto h = hierarchy_line(t)) {
      auto [level, label] = *h;
      std::optional<std::string>* slots[] = {&current.book, &current.division,
                                             &current.title, &current.subtitle};
      for (int l = 0; l < level; ++l) {
        if (!slots[l]->has_value()) {
          throw ParseError("hierarchy level without its parent level", line_no,
                           line_offset);
        }
      }
      *slots[level] = label;
      for (int l = level + 1; l < 4; ++l) slots[l]->reset();
      continue;
    }

    if (!pending) {
      // Preamble before the first section (law title etc.).
      continue;
    }

    if (!pending->have_heading) {
      if (subsection_marker(t)) {
        throw ParseError("section " + pending->section.section_id +
                             " lacks a heading line",
                         line_no, line_offset);
      }
      pending->section.heading = std::string(t);
      pending->have_heading = true;
    } else if (auto m = subsection_marker(t)) {
      auto [n, body] = *m;
      if (!pending->saw_marker && !pending->loose_text.empty()) {
        throw ParseError("text before the first subsection marker", line_no,
                         line_offset);
      }
      int expected = pending->blocks.empty() ? 1 : pending->blocks.back().first + 1;
      if (n != expected) {
        throw ParseError("subsection marker (" + std::to_string(n) +
                             ") out of sequence, expected (" +
                             std::to_string(expected) + ")",
                         line_no, line_offset);
      }
      pending->saw_marker = true;
      pending->blocks.emplace_back(n, std::string(body));
    } else if (pending->saw_marker) {
      append_text(pending->blocks.back().second, t);
    } else {
      append_text(pending->loose_text, t);
    }
  }
  flush();

  if (corpus.sections.empty()) {
    throw EmptyCorpusError("document contains no sections");
  }
  validate_corpus(corpus);
  return corpus;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "canonical-json" || name == "json") return CorpusFormat::canonical_json;
  if (name == "plain-statute-text" || name == "plain" || name == "text") {
    return CorpusFormat::plain_statute_text;
  }
  throw ConfigError("unknown corpus format \"" + std::string(name) + "\"");
}

Corpus parse_corpus_string(std::string_view raw, CorpusFormat format,
                           std::string_view name,
                           const SegmenterConfig& segmenter) {
  if (text::trim(raw).empty()) throw EmptyCorpusError("empty corpus document");
  if (format == CorpusFormat::canonical_json) {
    if (!text::is_valid_utf8(raw)) throw ParseError("invalid UTF-8", 0, 0);
    auto corpus = parse_json(raw, name);
    if (corpus.sections.empty()) throw EmptyCorpusError("corpus has no sections");
    return corpus;
  }
  return parse_plain(raw, name, segmenter);
}

Corpus parse_corpus(std::istream& raw, CorpusFormat format, std::string_view name,
                    const SegmenterConfig& segmenter) {
  std::string data{std::istreambuf_iterator<char>(raw), std::istreambuf_iterator<char>()};
  return parse_corpus_string(data, format, name, segmenter);
}

void validate_corpus(const Corpus& corpus) {
  if (corpus.sections.empty()) throw EmptyCorpusError("corpus has no sections");
  std::unordered_set<std::string> seen;
  for (std::size_t si = 0; si < corpus.sections.size(); ++si) {
    const auto& sec = corpus.sections[si];
    auto where = "section " + sec.section_id;
    auto normalized = normalize_section_id(sec.section_id);
    if (!normalized || *normalized != sec.section_id) {
      throw ParseError(where + ": id is not in normalized form", 0, si + 1);
    }
    if (!seen.insert(sec.section_id).second) {
      throw DuplicateIdError("duplicate section id " + sec.section_id);
    }
    const std::optional<std::string>* levels[] = {
        &sec.hierarchy.book, &sec.hierarchy.division, &sec.hierarchy.title,
        &sec.hierarchy.subtitle};
    for (int l = 0; l < 4; ++l) {
      if (!levels[l]->has_value()) continue;
      const auto& label = **levels[l];
      if (label.empty() || text::trim(label).size() != label.size()) {
        throw ParseError(where + ": hierarchy labels must be trimmed and non-empty", 0,
                         si + 1);
      }
      if (l > 0 && !levels[l - 1]->has_value()) {
        throw ParseError(where + ": hierarchy level present without its parent", 0,
                         si + 1);
      }
    }
    if (sec.subsections.empty()) throw ParseError(where + ": no subsections", 0, si + 1);
    int expected_sentence = 1;
    for (std::size_t k = 0; k < sec.subsections.size(); ++k) {
      const auto& sub = sec.subsections[k];
      if (sub.ordinal != static_cast<int>(k) + 1) {
        throw ParseError(where + ": subsection ordinals must be 1..n", 0, si + 1);
      }
      if (sub.sentences.empty()) {
        throw ParseError(where + ": subsection (" + std::to_string(sub.ordinal) +
                             ") has no sentences",
                         0, si + 1);
      }
      for (const auto& s : sub.sentences) {
        if (text::trim(s.text).empty()) {
          throw ParseError(where + ": empty sentence", 0, si + 1);
        }
        if (s.ordinal_in_section != expected_sentence++) {
          throw ParseError(where + ": sentence ordinals must be continuous", 0, si + 1);
        }
      }
    }
  }
}

std::string render_canonical_json(const Corpus& corpus) {
  nlohmann::ordered_json doc;
  doc["name"] = corpus.name;
  auto& sections = doc["sections"] = nlohmann::ordered_json::array();
  for (const auto& sec : corpus.sections) {
    nlohmann::ordered_json js;
    js["id"] = sec.section_id;
    js["heading"] = sec.heading;
    auto label = [](const std::optional<std::string>& v) {
      return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    js["hierarchy"] = {{"book", label(sec.hierarchy.book)},
                       {"division", label(sec.hierarchy.division)},
                       {"title", label(sec.hierarchy.title)},
                       {"subtitle", label(sec.hierarchy.subtitle)}};
    auto& subs = js["subsections"] = nlohmann::ordered_json::array();
    for (const auto& sub : sec.subsections) {
      nlohmann::ordered_json jsub;
      jsub["ordinal"] = sub.ordinal;
      auto& sents = jsub["sentences"] = nlohmann::ordered_json::array();
      for (const auto& s : sub.sentences) sents.push_back(s.text);
      subs.push_back(std::move(jsub));
    }
    sections.push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

}  // namespace chunkbench
