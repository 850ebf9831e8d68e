#include "corpusflow/stats.hpp"

#include <algorithm>

#include "corpusflow/text.hpp"

namespace corpusflow::stats {

void CorpusStats::merge(const CorpusStats& other) {
  documents += other.documents;
  sentences += other.sentences;
  tokens += other.tokens;
  for (const auto& [form, n] : other.form_counts) form_counts[form] += n;
  for (const auto& [column, hist] : other.histograms) {
    auto& dst = histograms[column];
    for (const auto& [value, n] : hist) dst[value] += n;
  }
}

std::vector<std::string> default_histogram_columns(const conllu::ColumnSchema& schema) {
  std::vector<std::string> out;
  for (const auto& c : schema.columns())
    if (c == conllu::kUpos || !conllu::is_canonical_column(c)) out.push_back(c);
  return out;
}

CorpusStats compute_stats(const std::vector<conllu::Document>& docs,
                          const std::optional<std::vector<std::string>>& columns) {
  CorpusStats stats;
  for (const auto& doc : docs) {
    ++stats.documents;
    stats.sentences += doc.sentences.size();
    std::vector<std::pair<std::string, std::size_t>> hist_cols;
    for (const auto& c : columns ? *columns : default_histogram_columns(doc.schema))
      if (auto idx = doc.schema.index_of(c)) hist_cols.emplace_back(c, *idx);
    for (const auto& sentence : doc.sentences) {
      for (const auto& token : sentence.tokens) {
        if (!token.is_word()) continue;
        ++stats.tokens;
        ++stats.form_counts[token.form()];
        for (const auto& [name, idx] : hist_cols) {
          const std::string& v = token.values[idx];
          if (v == conllu::kEmpty || v == "O" || text::starts_with(v, "I-")) continue;
          ++stats.histograms[name][text::starts_with(v, "B-") ? v.substr(2) : v];
        }
      }
    }
  }
  return stats;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string stats_to_csv(const CorpusStats& stats) {
  std::string out = "metric,value\n";
  out += "documents," + std::to_string(stats.documents) + "\n";
  out += "sentences," + std::to_string(stats.sentences) + "\n";
  out += "tokens," + std::to_string(stats.tokens) + "\n";
  out += "types," + std::to_string(stats.types()) + "\n";
  std::vector<std::pair<std::string, std::size_t>> rows;
  for (const auto& [column, hist] : stats.histograms)
    for (const auto& [value, n] : hist) rows.emplace_back("hist:" + column + ":" + value, n);
  std::sort(rows.begin(), rows.end());
  for (const auto& [metric, n] : rows) out += csv_field(metric) + "," + std::to_string(n) + "\n";
  return out;
}

}  // namespace corpusflow::stats
