#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "chunkbench/error.h"
#include "chunkbench/strategies.h"
#include "chunkbench/text.h"
#include "parallel.h"

namespace chunkbench {

std::vector<BaseUnit> base_units(const Corpus& corpus, Granularity granularity,
                                 std::span<const BaseUnit> propositions) {
  if (granularity != Granularity::proposition) return extract_units(corpus, granularity);
  if (propositions.empty()) {
    throw ConfigError("proposition granularity needs generated propositions");
  }
  return {propositions.begin(), propositions.end()};
}

std::vector<BaseUnit> propositionize_corpus(const Corpus& corpus, GenerationService& generator,
                                            std::size_t workers) {
  struct Job {
    const Section* section;
    BaseUnit sentence;
  };
  std::vector<Job> jobs;
  for (const auto& sec : corpus.sections) {
    for (const auto& sub : sec.subsections) {
      for (const auto& s : sub.sentences) {
        jobs.push_back(Job{&sec, BaseUnit{sec.section_id + ":sent:" +
                                              std::to_string(s.ordinal_in_section),
                                          Granularity::sentence, sec.section_id, s.text,
                                          s.ordinal_in_section, s.ordinal_in_section}});
      }
    }
  }

  std::vector<std::vector<std::string>> results(jobs.size());
  detail::parallel_for(jobs.size(), workers, [&](std::size_t i) {
    results[i] = generator.propositionize(jobs[i].sentence, make_section_context(*jobs[i].section));
  });

  std::vector<BaseUnit> out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& src = jobs[i].sentence;
    for (std::size_t p = 0; p < results[i].size(); ++p) {
      out.push_back(BaseUnit{src.parent_section_id + ":prop:" +
                                 std::to_string(src.first_sentence) + "." + std::to_string(p + 1),
                             Granularity::proposition, src.parent_section_id, results[i][p],
                             src.first_sentence, src.last_sentence});
    }
  }
  return out;
}

void save_units(const std::filesystem::path& path, std::span<const BaseUnit> units) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& u : units) {
    nlohmann::ordered_json j{{"unit_id", u.unit_id},
                             {"granularity", to_string(u.granularity)},
                             {"section", u.parent_section_id},
                             {"first_sentence", u.first_sentence},
                             {"last_sentence", u.last_sentence},
                             {"text", u.text}};
    out << j.dump() << '\n';
  }
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<BaseUnit> load_units(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<BaseUnit> units;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      units.push_back(BaseUnit{j.at("unit_id").get<std::string>(),
                               parse_granularity(j.at("granularity").get<std::string>()),
                               j.at("section").get<std::string>(), j.at("text").get<std::string>(),
                               j.at("first_sentence").get<int>(),
                               j.at("last_sentence").get<int>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no, 0);
    }
  }
  return units;
}

// ---------------------------------------------------------------------------

TokenStream render_token_stream(const Corpus& corpus) {
  TokenStream stream;
  for (std::size_t si = 0; si < corpus.sections.size(); ++si) {
    const auto owner = static_cast<std::uint32_t>(si);
    for (const auto& sub : corpus.sections[si].subsections) {
      stream.tokens.push_back("(" + std::to_string(sub.ordinal) + ")");
      stream.section_of.push_back(owner);
      for (const auto& s : sub.sentences) {
        for (auto tok : text::split_whitespace(s.text)) {
          stream.tokens.emplace_back(tok);
          stream.section_of.push_back(owner);
        }
      }
    }
  }
  return stream;
}

std::size_t fixed_window_count(std::size_t total_tokens, std::size_t window,
                               std::size_t overlap) {
  if (window <= overlap) throw ConfigError("window must exceed overlap");
  const std::size_t stride = window - overlap;
  const std::size_t span = total_tokens > overlap ? total_tokens - overlap : 1;
  return (span + stride - 1) / stride;
}

std::vector<std::string> ordered_parents(std::span<const BaseUnit> units,
                                         std::span<const std::size_t> members,
                                         const SectionOrder& order) {
  std::vector<std::string> parents;
  for (auto m : members) parents.push_back(units[m].parent_section_id);
  std::sort(parents.begin(), parents.end(),
            [&](const std::string& a, const std::string& b) { return order.less(a, b); });
  parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
  return parents;
}

}  // namespace chunkbench
