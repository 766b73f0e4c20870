#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "chunkbench/corpus.h"
#include "chunkbench/error.h"
#include "fixtures.h"

namespace chunkbench {
namespace {

using testing::build_corpus;
using testing::render_plain;

// Independent canonical-JSON writer for the round-trip oracle.
std::string spec_to_json(const testing::CorpusSpec& spec) {
  nlohmann::json doc{{"name", "fixture"}, {"sections", nlohmann::json::array()}};
  for (const auto& s : spec.sections) {
    nlohmann::json js{{"id", s.id}, {"heading", s.heading}};
    js["hierarchy"] = {{"book", spec.hierarchy.book.value_or("")}};
    for (std::size_t b = 0; b < s.subsections.size(); ++b) {
      js["subsections"].push_back({{"ordinal", b + 1}, {"sentences", s.subsections[b]}});
    }
    doc["sections"].push_back(js);
  }
  return doc.dump();
}

TEST(PlainText, LeaseSectionHasTwoSubsections) {
  const Corpus c = parse_corpus_string(render_plain(testing::lease_spec()),
                                       CorpusFormat::plain_statute_text, "fixture");
  ASSERT_EQ(c.sections.size(), 1u);
  EXPECT_EQ(c.sections[0].section_id, "535");
  EXPECT_EQ(c.sections[0].heading, "Contents and primary duties of the lease agreement");
  ASSERT_EQ(c.sections[0].subsections.size(), 2u);
  EXPECT_EQ(c.sections[0].subsections[0].sentences.size(), 3u);
  EXPECT_EQ(c.sections[0].subsections[1].sentences.size(), 1u);
  EXPECT_EQ(c.sections[0].hierarchy.book, "Law of Obligations");
  EXPECT_EQ(c.sections[0].hierarchy.division, "Lease");
}

TEST(PlainText, ParsesEveryFixtureToTheBuilderValue) {
  for (const auto& spec : {testing::lease_spec(), testing::minors_lumber_spec(),
                           testing::sale_spec(), testing::penalty_spec(),
                           testing::minors_consent_spec()}) {
    const Corpus parsed =
        parse_corpus_string(render_plain(spec), CorpusFormat::plain_statute_text, "fixture");
    EXPECT_EQ(parsed, build_corpus(spec));
  }
}

TEST(PlainText, SyntheticCorporaRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto syn = testing::make_synthetic_corpus(30, seed);
    const Corpus parsed = parse_corpus_string(render_plain(syn.spec),
                                              CorpusFormat::plain_statute_text, "synthetic");
    EXPECT_EQ(parsed, syn.corpus) << "seed " << seed;
  }
}

TEST(PlainText, SentencesAreNumberedAcrossSubsections) {
  const Corpus c = build_corpus(testing::minors_lumber_spec());
  const Section& s112 = c.sections[1];
  EXPECT_EQ(s112.subsections[0].sentences[0].ordinal_in_section, 1);
  EXPECT_EQ(s112.subsections[0].sentences[1].ordinal_in_section, 2);
  EXPECT_EQ(s112.subsections[1].sentences[0].ordinal_in_section, 3);
  const Corpus parsed = parse_corpus_string(render_plain(testing::minors_lumber_spec()),
                                            CorpusFormat::plain_statute_text);
  EXPECT_EQ(parsed.sections[1].subsections[1].sentences[0].ordinal_in_section, 3);
}

TEST(PlainText, WrappedLinesJoinTheirSubsection) {
  const std::string raw =
      "\xC2\xA7 1 Heading\n(1) First part of a sentence\n   continues here. Second one.\n"
      "(2) Other block.\n";
  const Corpus c = parse_corpus_string(raw, CorpusFormat::plain_statute_text);
  ASSERT_EQ(c.sections[0].subsections.size(), 2u);
  ASSERT_EQ(c.sections[0].subsections[0].sentences.size(), 2u);
  EXPECT_EQ(c.sections[0].subsections[0].sentences[0].text,
            "First part of a sentence continues here.");
}

TEST(PlainText, SectionWithoutMarkersIsOneSubsection) {
  const std::string raw = "\xC2\xA7 90a Animals\nAnimals are not things. They are protected.\n";
  const Corpus c = parse_corpus_string(raw, CorpusFormat::plain_statute_text);
  ASSERT_EQ(c.sections.size(), 1u);
  EXPECT_EQ(c.sections[0].section_id, "90a");
  ASSERT_EQ(c.sections[0].subsections.size(), 1u);
  EXPECT_EQ(c.sections[0].subsections[0].sentences.size(), 2u);
}

TEST(PlainText, HeadingOnItsOwnLine) {
  const std::string raw = "\xC2\xA7 7\nResidence\n(1) A person has a residence.\n";
  const Corpus c = parse_corpus_string(raw, CorpusFormat::plain_statute_text);
  EXPECT_EQ(c.sections[0].heading, "Residence");
}

TEST(PlainText, RejectsEmptyInput) {
  EXPECT_THROW(parse_corpus_string("", CorpusFormat::plain_statute_text), EmptyCorpusError);
  EXPECT_THROW(parse_corpus_string("Preamble only\n", CorpusFormat::plain_statute_text),
               EmptyCorpusError);
}

TEST(PlainText, RejectsDuplicateSections) {
  const std::string raw = "\xC2\xA7 1 A\n(1) Text one.\n\xC2\xA7 1 B\n(1) Text two.\n";
  EXPECT_THROW(parse_corpus_string(raw, CorpusFormat::plain_statute_text), DuplicateIdError);
}

TEST(PlainText, RejectsOutOfSequenceMarkers) {
  const std::string raw = "\xC2\xA7 1 A\n(1) Text one.\n(3) Text three.\n";
  EXPECT_THROW(parse_corpus_string(raw, CorpusFormat::plain_statute_text), ParseError);
}

TEST(PlainText, ParseErrorsCarryLineNumbers) {
  const std::string raw = "\xC2\xA7 1 A\n(1) Text one.\n(3) Text three.\n";
  try {
    parse_corpus_string(raw, CorpusFormat::plain_statute_text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.offset(), 21u);
  }
}

TEST(PlainText, RejectsInvalidUtf8) {
  const std::string raw = "\xC2\xA7 1 A\n(1) Bad \xFF byte.\n";
  EXPECT_THROW(parse_corpus_string(raw, CorpusFormat::plain_statute_text), ParseError);
}

TEST(PlainText, RejectsSectionWithoutSentences) {
  const std::string raw = "\xC2\xA7 1 A\n\xC2\xA7 2 B\n(1) Text.\n";
  EXPECT_THROW(parse_corpus_string(raw, CorpusFormat::plain_statute_text), ParseError);
}

TEST(CanonicalJson, TwentySectionFixturePreservesOrder) {
  const auto syn = testing::make_synthetic_corpus(20, 42);
  const Corpus c = parse_corpus_string(spec_to_json(syn.spec), CorpusFormat::canonical_json);
  ASSERT_EQ(c.sections.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(c.sections[i].section_id, syn.spec.sections[i].id);
    EXPECT_EQ(c.sections[i].subsections, syn.corpus.sections[i].subsections);
  }
}

TEST(CanonicalJson, RenderThenParseIsIdentity) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto syn = testing::make_synthetic_corpus(25, seed);
    const std::string once = render_canonical_json(syn.corpus);
    const Corpus back = parse_corpus_string(once, CorpusFormat::canonical_json);
    EXPECT_EQ(back.sections, syn.corpus.sections);
    EXPECT_EQ(render_canonical_json(back), once);
  }
}

TEST(CanonicalJson, MalformedDocumentsThrow) {
  EXPECT_THROW(parse_corpus_string("{", CorpusFormat::canonical_json), ParseError);
  EXPECT_THROW(parse_corpus_string(R"({"sections": [{"heading": "x"}]})",
                                   CorpusFormat::canonical_json),
               ParseError);
  EXPECT_THROW(parse_corpus_string(R"({"sections": []})", CorpusFormat::canonical_json),
               EmptyCorpusError);
}

TEST(CorpusFormatName, KnownAndUnknown) {
  EXPECT_EQ(parse_corpus_format("canonical-json"), CorpusFormat::canonical_json);
  EXPECT_EQ(parse_corpus_format("plain-statute-text"), CorpusFormat::plain_statute_text);
  EXPECT_THROW(parse_corpus_format("xml"), ConfigError);
}

TEST(Segmenter, LeaseBodyHasThreeSentences) {
  const std::string body =
      "A lease agreement imposes on the lessor a duty to grant the lessee use of the leased "
      "property for the lease period. The lessor is to make available the leased property to "
      "the lessee in a condition suitable for use as contractually agreed and maintain it in "
      "this condition for the lease period. The lessor is to bear all costs to which the "
      "leased property is subject.";
  EXPECT_EQ(segment_sentences(body).size(), 3u);
}

TEST(Segmenter, CitationAbbreviationsDoNotSplit) {
  EXPECT_EQ(segment_sentences("Der Verbraucher i. S. d. § 13 BGB haftet.").size(), 1u);
  EXPECT_EQ(segment_sentences("Dies gilt nach Abs. 2 Nr. 3 entsprechend.").size(), 1u);
  EXPECT_EQ(segment_sentences("Siehe z. B. die Regel, vgl. § 1.").size(), 1u);
  EXPECT_EQ(segment_sentences("Satz 2. Die Regel gilt.").size(), 1u);
}

TEST(Segmenter, SplitsOrdinarySentences) {
  const auto parts = segment_sentences("Das ist eins. Das ist zwei! Ist das drei? Ja.");
  ASSERT_EQ(parts.size(), 4u);
  EXPECT_EQ(parts[1], "Das ist zwei!");
}

TEST(Segmenter, CustomAbbreviationList) {
  SegmenterConfig config;
  config.abbreviations = {"Art."};
  EXPECT_EQ(segment_sentences("Nach Art. Fünf gilt das.", config).size(), 1u);
  EXPECT_EQ(segment_sentences("Nach Abs. Fünf gilt das.", config).size(), 2u);
}

TEST(SectionIds, Normalization) {
  EXPECT_EQ(normalize_section_id("§ 566 A"), "566a");
  EXPECT_EQ(normalize_section_id("535"), "535");
  EXPECT_EQ(normalize_section_id(" §566a "), "566a");
  EXPECT_FALSE(normalize_section_id("abc").has_value());
  EXPECT_FALSE(normalize_section_id("").has_value());
}

TEST(SectionIds, NaturalOrder) {
  EXPECT_TRUE(natural_section_less("9", "10"));
  EXPECT_TRUE(natural_section_less("566", "566a"));
  EXPECT_TRUE(natural_section_less("566a", "566b"));
  EXPECT_FALSE(natural_section_less("10", "9"));
}

TEST(SectionOrder, CorpusPositionsThenNaturalOrder) {
  const SectionOrder order(build_corpus(testing::minors_consent_spec()));
  EXPECT_EQ(order.position("108"), 1u);
  EXPECT_FALSE(order.position("999").has_value());
  EXPECT_TRUE(order.less("111", "433"));
  EXPECT_TRUE(order.less("535", "600"));
  EXPECT_TRUE(order.less("600", "700"));
}

TEST(Units, LeaseGranularities) {
  const Corpus c = build_corpus(testing::lease_spec());
  EXPECT_EQ(extract_units(c, Granularity::section).size(), 1u);
  const auto subs = extract_units(c, Granularity::subsection);
  ASSERT_EQ(subs.size(), 2u);
  EXPECT_EQ(subs[0].parent_section_id, "535");
  EXPECT_EQ(subs[0].first_sentence, 1);
  EXPECT_EQ(subs[0].last_sentence, 3);
  EXPECT_EQ(subs[1].text, "The lessee is obliged to pay the lessor the agreed rent.");
  const auto sents = extract_units(c, Granularity::sentence);
  ASSERT_EQ(sents.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(sents[i].first_sentence, i + 1);
  EXPECT_EQ(sents[3].unit_id, "535:sent:4");
  EXPECT_THROW(extract_units(c, Granularity::proposition), ConfigError);
}

TEST(Units, CountsMatchIndependentPass) {
  const auto syn = testing::make_synthetic_corpus(20, 3);
  std::size_t subs = 0, sents = 0;
  for (const auto& s : syn.spec.sections) {
    subs += s.subsections.size();
    for (const auto& b : s.subsections) sents += b.size();
  }
  EXPECT_EQ(extract_units(syn.corpus, Granularity::subsection).size(), subs);
  EXPECT_EQ(extract_units(syn.corpus, Granularity::sentence).size(), sents);
  const CorpusCounts counts = count_corpus(syn.corpus);
  EXPECT_EQ(counts.sections, 20u);
  EXPECT_EQ(counts.subsections, subs);
  EXPECT_EQ(counts.sentences, sents);
}

TEST(SectionText, FullTextCarriesBothBlocks) {
  const Corpus c = build_corpus(testing::lease_spec());
  const std::string full = section_full_text(c.sections[0]);
  EXPECT_NE(full.find("(1) A lease agreement"), std::string::npos);
  EXPECT_NE(full.find("(2) The lessee is obliged"), std::string::npos);
  EXPECT_EQ(full.rfind("Contents and primary duties", 0), 0u);
  const auto ctx = make_section_context(c.sections[0]);
  EXPECT_EQ(ctx.hierarchy.labels(),
            (std::vector<std::string>{"Law of Obligations", "Lease"}));
  EXPECT_NE(ctx.render().find("Book: Law of Obligations"), std::string::npos);
}

TEST(Validation, RejectsBrokenInvariants) {
  Corpus c = build_corpus(testing::lease_spec());
  validate_corpus(c);
  Corpus dup = c;
  dup.sections.push_back(c.sections[0]);
  EXPECT_THROW(validate_corpus(dup), DuplicateIdError);
  Corpus gap = c;
  gap.sections[0].subsections[1].ordinal = 3;
  EXPECT_THROW(validate_corpus(gap), ParseError);
  Corpus hier = c;
  hier.sections[0].hierarchy.book.reset();
  EXPECT_THROW(validate_corpus(hier), ParseError);
  EXPECT_THROW(validate_corpus(Corpus{}), EmptyCorpusError);
}

}  // namespace
}  // namespace chunkbench
