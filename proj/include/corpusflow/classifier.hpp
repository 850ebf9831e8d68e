#pragma once

// Multi-label document classification with a linear layer over the mean of
// word / word n-gram embeddings, plus micro-averaged top-k evaluation.
//
// Model file (plain text, whitespace separated numbers):
//
//   <dim> <labels> <ngram_max>
//   <label>                       x labels, one per line
//   <w_1> ... <w_dim> <bias>      x labels, one row per label
//   <unit><TAB><v_1> ... <v_dim>  embedding entries until end of file
//
// An n-gram unit is its tokens joined by kNgramSeparator.

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace corpusflow::classify {

inline constexpr std::string_view kNgramSeparator = " ";
inline constexpr std::size_t kDefaultTopK = 6;

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension = 1);
  std::size_t dimension() const { return dimension_; }
  void set(std::string unit, std::vector<double> vector);  // throws on length mismatch
  const std::vector<double>* find(std::string_view unit) const;
  std::size_t size() const { return vectors_.size(); }
  const std::unordered_map<std::string, std::vector<double>>& entries() const { return vectors_; }

 private:
  std::size_t dimension_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct LinearModel {
  EmbeddingTable table;
  std::vector<std::vector<double>> weights;  // labels x dimension
  std::vector<double> biases;
  std::vector<std::string> labels;
  std::size_t ngram_max = 1;

  // Throws InvalidArgument on shape mismatches.
  void check() const;
};

LinearModel read_model(std::istream& in);
LinearModel load_model(const std::string& path);
std::string write_model(const LinearModel& model);

// Mean of the embeddings of every contiguous n-gram occurrence (n = 1..ngram_max)
// found in the table; misses contribute nothing. No hits -> zero vector.
std::vector<double> featurize(const std::vector<std::string>& tokens, const LinearModel& model);

using Ranking = std::vector<std::pair<std::string, double>>;

// Scores weights.feature + bias, sorted descending, ties by label order in
// the model; min(k, labels) entries. k must be >= 1.
Ranking classify_topk(const std::vector<std::string>& tokens, const LinearModel& model,
                      std::size_t k = kDefaultTopK);
Ranking rank_features(const std::vector<double>& feature, const LinearModel& model, std::size_t k);

struct DocumentCounts {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<std::string, DocumentCounts> per_document;

  nlohmann::json to_json() const;
  // "precision,recall,f1" values on one line.
  std::string to_csv_line() const;
};

using LabelSets = std::map<std::string, std::vector<std::string>>;

// Micro-averaged over documents; duplicate labels inside one document count
// once. Throws InvalidArgument when the document id sets differ.
EvalReport evaluate(const LabelSets& predictions, const LabelSets& gold);
// {"doc_id": ["label", ...], ...}
LabelSets parse_label_sets(const nlohmann::json& j);

}  // namespace corpusflow::classify
