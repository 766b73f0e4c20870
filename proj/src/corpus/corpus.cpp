#include <cctype>
#include <string>

#include "chunkbench/corpus.h"
#include "chunkbench/error.h"
#include "chunkbench/text.h"

namespace chunkbench {

std::vector<std::string> HierarchyPath::labels() const {
  std::vector<std::string> out;
  for (const auto* level : {&book, &division, &title, &subtitle}) {
    if (level->has_value()) out.push_back(**level);
  }
  return out;
}

std::size_t Section::sentence_count() const {
  std::size_t n = 0;
  for (const auto& sub : subsections) n += sub.sentences.size();
  return n;
}

const Section* Corpus::find(std::string_view section_id) const {
  for (const auto& s : sections) {
    if (s.section_id == section_id) return &s;
  }
  return nullptr;
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::section: return "section";
    case Granularity::subsection: return "subsection";
    case Granularity::sentence: return "sentence";
    case Granularity::proposition: return "proposition";
  }
  return "?";
}

std::string_view display_label(Granularity g) {
  switch (g) {
    case Granularity::section: return "Section";
    case Granularity::subsection: return "Subsection";
    case Granularity::sentence: return "Sentence";
    case Granularity::proposition: return "Proposition";
  }
  return "?";
}

Granularity parse_granularity(std::string_view name) {
  auto n = text::to_lower(name);
  if (n == "section") return Granularity::section;
  if (n == "subsection") return Granularity::subsection;
  if (n == "sentence") return Granularity::sentence;
  if (n == "proposition") return Granularity::proposition;
  throw ConfigError("unknown granularity \"" + std::string(name) + "\"");
}

std::optional<std::string> normalize_section_id(std::string_view raw) {
  std::string_view s = text::trim(raw);
  static constexpr std::string_view kParagraph = "\xC2\xA7";
  while (text::starts_with(s, kParagraph)) s = text::trim(s.substr(kParagraph.size()));
  std::string out;
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) out.push_back(s[i++]);
  if (out.empty()) return std::nullopt;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i++]))));
  }
  if (i != s.size()) return std::nullopt;
  return out;
}

bool natural_section_less(std::string_view a, std::string_view b) {
  auto split = [](std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    std::string_view digits = s.substr(0, i);
    while (digits.size() > 1 && digits.front() == '0') digits.remove_prefix(1);
    return std::pair{digits, s.substr(i)};
  };
  auto [da, sa] = split(a);
  auto [db, sb] = split(b);
  if (da.size() != db.size()) return da.size() < db.size();
  if (da != db) return da < db;
  return sa < sb;
}

SectionOrder::SectionOrder(const Corpus& corpus) {
  positions_.reserve(corpus.sections.size());
  for (std::size_t i = 0; i < corpus.sections.size(); ++i) {
    positions_.emplace(corpus.sections[i].section_id, i);
  }
}

std::optional<std::size_t> SectionOrder::position(std::string_view section_id) const {
  auto it = positions_.find(std::string(section_id));
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

bool SectionOrder::less(std::string_view a, std::string_view b) const {
  auto pa = position(a);
  auto pb = position(b);
  if (pa && pb) return *pa < *pb;
  if (pa) return true;
  if (pb) return false;
  return natural_section_less(a, b);
}

namespace {

std::string join_sentences(const Subsection& sub) {
  std::string out;
  for (const auto& s : sub.sentences) {
    if (!out.empty()) out.push_back(' ');
    out.append(s.text);
  }
  return out;
}

}  // namespace

std::string section_full_text(const Section& section) {
  std::string out = section.heading;
  for (const auto& sub : section.subsections) {
    out.append("\n(");
    out.append(std::to_string(sub.ordinal));
    out.append(") ");
    out.append(join_sentences(sub));
  }
  return out;
}

std::string section_body_text(const Section& section) {
  std::string out;
  for (const auto& sub : section.subsections) {
    if (!out.empty()) out.push_back(' ');
    out.append(join_sentences(sub));
  }
  return out;
}

std::string SectionContext::render() const {
  static constexpr const char* kLevelNames[] = {"Book", "Division", "Title", "Subtitle"};
  const std::optional<std::string>* levels[] = {&hierarchy.book, &hierarchy.division,
                                                &hierarchy.title, &hierarchy.subtitle};
  std::string out;
  for (int l = 0; l < 4; ++l) {
    if (!levels[l]->has_value()) continue;
    out.append(kLevelNames[l]).append(": ").append(**levels[l]).append("\n");
  }
  out.append("Section ").append(section_id).append(": ").append(heading).append("\n\n");
  out.append("Section ").append(section_id).append("\n").append(full_text);
  return out;
}

SectionContext make_section_context(const Section& section) {
  return SectionContext{section.hierarchy, section.section_id, section.heading,
                        section_full_text(section)};
}

std::vector<BaseUnit> extract_units(const Corpus& corpus, Granularity granularity) {
  std::vector<BaseUnit> units;
  for (const auto& sec : corpus.sections) {
    const int last = static_cast<int>(sec.sentence_count());
    switch (granularity) {
      case Granularity::section:
        units.push_back(BaseUnit{sec.section_id + ":sec", granularity, sec.section_id,
                                 section_full_text(sec), 1, last});
        break;
      case Granularity::subsection:
        for (const auto& sub : sec.subsections) {
          units.push_back(BaseUnit{
              sec.section_id + ":sub:" + std::to_string(sub.ordinal), granularity,
              sec.section_id, join_sentences(sub), sub.sentences.front().ordinal_in_section,
              sub.sentences.back().ordinal_in_section});
        }
        break;
      case Granularity::sentence:
        for (const auto& sub : sec.subsections) {
          for (const auto& s : sub.sentences) {
            units.push_back(BaseUnit{
                sec.section_id + ":sent:" + std::to_string(s.ordinal_in_section),
                granularity, sec.section_id, s.text, s.ordinal_in_section,
                s.ordinal_in_section});
          }
        }
        break;
      case Granularity::proposition:
        throw ConfigError(
            "proposition units are produced by propositionize, not extract_units");
    }
  }
  return units;
}

CorpusCounts count_corpus(const Corpus& corpus) {
  CorpusCounts c;
  c.sections = corpus.sections.size();
  for (const auto& sec : corpus.sections) {
    c.subsections += sec.subsections.size();
    c.sentences += sec.sentence_count();
  }
  return c;
}

}  // namespace chunkbench
