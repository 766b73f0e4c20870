#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "chunkbench/error.h"
#include "chunkbench/evalstat.h"
#include "chunkbench/text.h"

namespace chunkbench {

double QADataset::mean_gold_size() const {
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : records) total += static_cast<double>(r.gold_section_ids.size());
  return total / static_cast<double>(records.size());
}

QADataset load_qa_dataset(std::istream& in, const Corpus* corpus) {
  QADataset data;
  std::unordered_set<std::string> seen_ids;
  std::optional<SectionOrder> order;
  if (corpus) order.emplace(*corpus);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = "QA line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    QARecord r;
    try {
      r.query_id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      r.question = j.at("question").get<std::string>();
      for (const auto& g : j.at("gold_sections")) {
        const std::string raw = g.is_string() ? g.get<std::string>() : g.dump();
        auto id = normalize_section_id(raw);
        if (!id) throw DataError(where + ": malformed gold section \"" + raw + "\"");
        if (std::find(r.gold_section_ids.begin(), r.gold_section_ids.end(), *id) ==
            r.gold_section_ids.end()) {
          r.gold_section_ids.push_back(*id);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (r.gold_section_ids.empty()) throw DataError(where + ": empty gold set for " + r.query_id);
    if (text::trim(r.question).empty()) throw DataError(where + ": empty question");
    if (!seen_ids.insert(r.query_id).second) {
      throw DataError(where + ": duplicate query id " + r.query_id);
    }
    if (order) {
      for (const auto& g : r.gold_section_ids) {
        if (!order->position(g)) data.unknown_gold.push_back(r.query_id + ":" + g);
      }
    }
    data.records.push_back(std::move(r));
  }
  if (data.records.empty()) throw DataError("QA dataset is empty");
  if (!data.unknown_gold.empty()) {
    spdlog::warn("{} gold labels name sections missing from the corpus (first: {})",
                 data.unknown_gold.size(), data.unknown_gold.front());
  }
  return data;
}

QADataset load_qa_dataset(const std::filesystem::path& path, const Corpus* corpus) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read QA dataset " + path.string());
  return load_qa_dataset(in, corpus);
}

double recall_at_k(std::span<const std::string> ranked_ids, std::span<const std::string> gold,
                   std::size_t k) {
  if (gold.empty()) throw DataError("recall needs a non-empty gold set");
  const std::size_t top = std::min(k, ranked_ids.size());
  std::size_t hits = 0;
  for (const auto& g : gold) {
    if (std::find(ranked_ids.begin(), ranked_ids.begin() + static_cast<std::ptrdiff_t>(top), g) !=
        ranked_ids.begin() + static_cast<std::ptrdiff_t>(top)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double recall_at_k(const SectionRanking& ranking, std::span<const std::string> gold) {
  auto ids = ranking.section_ids();
  return recall_at_k(ids, gold, ranking.k_sections);
}

EvalMatrix::EvalMatrix(std::vector<std::string> questions, std::vector<std::string> methods)
    : question_ids(std::move(questions)),
      method_tags(std::move(methods)),
      values(question_ids.size() * method_tags.size(), 0.0) {}

std::vector<double> EvalMatrix::column(std::size_t m) const {
  std::vector<double> out(rows());
  for (std::size_t q = 0; q < rows(); ++q) out[q] = at(q, m);
  return out;
}

std::size_t EvalMatrix::method_index(std::string_view tag) const {
  for (std::size_t m = 0; m < method_tags.size(); ++m) {
    if (method_tags[m] == tag) return m;
  }
  throw DataError("no method \"" + std::string(tag) + "\" in the evaluation matrix");
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace chunkbench
