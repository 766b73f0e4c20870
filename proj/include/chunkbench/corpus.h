#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chunkbench {

/// Position of a section in the book/division/title/subtitle hierarchy.
/// A deeper label is only present when every shallower one is.
struct HierarchyPath {
  std::optional<std::string> book;
  std::optional<std::string> division;
  std::optional<std::string> title;
  std::optional<std::string> subtitle;

  /// Present labels, shallowest first.
  std::vector<std::string> labels() const;

  bool operator==(const HierarchyPath&) const = default;
};

struct Sentence {
  int ordinal_in_section = 0;  // continuous across subsections
  std::string text;

  bool operator==(const Sentence&) const = default;
};

struct Subsection {
  int ordinal = 0;
  std::vector<Sentence> sentences;

  bool operator==(const Subsection&) const = default;
};

struct Section {
  std::string section_id;  // normalized, e.g. "535", "566a"
  std::string heading;
  HierarchyPath hierarchy;
  std::vector<Subsection> subsections;

  std::size_t sentence_count() const;

  bool operator==(const Section&) const = default;
};

struct Corpus {
  std::string name;
  std::vector<Section> sections;

  const Section* find(std::string_view section_id) const;

  bool operator==(const Corpus&) const = default;
};

enum class Granularity { section, subsection, sentence, proposition };

std::string_view to_string(Granularity g);
/// Throws ConfigError on unknown names.
Granularity parse_granularity(std::string_view name);
/// "Section", "Subsection", "Sentence", "Proposition".
std::string_view display_label(Granularity g);

/// One granularity-tagged span of a single section. `first_sentence` and
/// `last_sentence` give the covered range of section sentence ordinals; a
/// proposition points at the sentence range of the unit it was derived from.
struct BaseUnit {
  std::string unit_id;
  Granularity granularity = Granularity::section;
  std::string parent_section_id;
  std::string text;
  int first_sentence = 0;
  int last_sentence = 0;

  bool operator==(const BaseUnit&) const = default;
};

enum class CorpusFormat { canonical_json, plain_statute_text };

/// Throws ConfigError on unknown names ("canonical-json", "plain-statute-text").
CorpusFormat parse_corpus_format(std::string_view name);

/// Lookup from section id to document position.
class SectionOrder {
 public:
  SectionOrder() = default;
  explicit SectionOrder(const Corpus& corpus);

  /// Document position, or nullopt for ids the corpus does not contain.
  std::optional<std::size_t> position(std::string_view section_id) const;

  /// Corpus order for known ids; unknown ids sort after all known ones in
  /// natural (numeric, then suffix) order.
  bool less(std::string_view a, std::string_view b) const;

  std::size_t size() const { return positions_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> positions_;
};

/// Natural order on section ids: numeric part first, then letter suffix.
bool natural_section_less(std::string_view a, std::string_view b);

/// "§ 566 A" -> "566a". Returns nullopt if the result does not match
/// `[0-9]+[a-z]*`.
std::optional<std::string> normalize_section_id(std::string_view raw);

/// Sentence splitter configuration. Entries ending in '.' are matched
/// against the text right before a candidate break; entries without a
/// trailing period ("§", "Satz") protect a number directly after them
/// ("Satz 2. Die ..." does not split).
struct SegmenterConfig {
  std::vector<std::string> abbreviations;
  bool protect_single_digits = true;

  static SegmenterConfig defaults();
};

std::vector<std::string> segment_sentences(
    std::string_view text,
    const SegmenterConfig& config = SegmenterConfig::defaults());

Corpus parse_corpus(std::istream& raw, CorpusFormat format,
                    std::string_view name = "corpus",
                    const SegmenterConfig& segmenter = SegmenterConfig::defaults());

Corpus parse_corpus_string(std::string_view raw, CorpusFormat format,
                           std::string_view name = "corpus",
                           const SegmenterConfig& segmenter =
                               SegmenterConfig::defaults());

/// Throws ParseError / DuplicateIdError / EmptyCorpusError when any corpus
/// invariant is violated.
void validate_corpus(const Corpus& corpus);

/// Canonical JSON rendering; `parse_corpus` on the result gives back the
/// same value.
std::string render_canonical_json(const Corpus& corpus);

/// Heading line, then one "(n) ..." line per subsection.
std::string section_full_text(const Section& section);

/// All sentences of the section joined by single spaces.
std::string section_body_text(const Section& section);

/// Hierarchy labels plus the full section, as handed to context generators.
struct SectionContext {
  HierarchyPath hierarchy;
  std::string section_id;
  std::string heading;
  std::string full_text;

  std::string render() const;
};

SectionContext make_section_context(const Section& section);

std::vector<BaseUnit> extract_units(const Corpus& corpus, Granularity granularity);

struct CorpusCounts {
  std::size_t sections = 0;
  std::size_t subsections = 0;
  std::size_t sentences = 0;
};

CorpusCounts count_corpus(const Corpus& corpus);

}  // namespace chunkbench
