#include "corpusflow/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "corpusflow/error.hpp"
#include "corpusflow/text.hpp"

namespace corpusflow::classify {

namespace {

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + s + "'", line_no);
  }
}

std::size_t parse_count(const std::string& s, std::size_t line_no) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("not a count: '" + s + "'", line_no);
  return v;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw InvalidArgument("embedding dimension must be positive");
}

void EmbeddingTable::set(std::string unit, std::vector<double> vector) {
  if (vector.size() != dimension_)
    throw InvalidArgument("embedding for '" + unit + "' has length " +
                          std::to_string(vector.size()) + ", expected " +
                          std::to_string(dimension_));
  vectors_[std::move(unit)] = std::move(vector);
}

const std::vector<double>* EmbeddingTable::find(std::string_view unit) const {
  auto it = vectors_.find(std::string(unit));
  return it == vectors_.end() ? nullptr : &it->second;
}

void LinearModel::check() const {
  if (labels.empty()) throw InvalidArgument("model has no labels");
  if (weights.size() != labels.size() || biases.size() != labels.size())
    throw InvalidArgument("weight rows, biases and labels must have equal counts");
  for (const auto& row : weights)
    if (row.size() != table.dimension()) throw InvalidArgument("weight row length != dimension");
  if (ngram_max == 0) throw InvalidArgument("ngram_max must be >= 1");
}

LinearModel read_model(std::istream& in) {
  LinearModel model;
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!text::trim(line).empty()) return;
    }
    throw ParseError(std::string("model file ended before ") + what, line_no);
  };

  next_line("the header");
  auto header = text::split_ws(line);
  if (header.size() != 3) throw ParseError("header must be '<dim> <labels> <ngram_max>'", line_no);
  const std::size_t dim = parse_count(header[0], line_no);
  const std::size_t label_count = parse_count(header[1], line_no);
  model.ngram_max = parse_count(header[2], line_no);
  if (dim == 0 || label_count == 0 || model.ngram_max == 0)
    throw ParseError("header values must be positive", line_no);
  model.table = EmbeddingTable(dim);

  std::set<std::string> seen;
  for (std::size_t i = 0; i < label_count; ++i) {
    next_line("the label list");
    std::string label(text::trim(line));
    if (!seen.insert(label).second) throw ParseError("duplicate label '" + label + "'", line_no);
    model.labels.push_back(std::move(label));
  }
  for (std::size_t i = 0; i < label_count; ++i) {
    next_line("the weight rows");
    auto cells = text::split_ws(line);
    if (cells.size() != dim + 1)
      throw ParseError("weight row needs " + std::to_string(dim) + " weights and a bias", line_no);
    std::vector<double> row;
    row.reserve(dim);
    for (std::size_t c = 0; c < dim; ++c) row.push_back(parse_double(cells[c], line_no));
    model.weights.push_back(std::move(row));
    model.biases.push_back(parse_double(cells[dim], line_no));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError("embedding entry needs unit<TAB>vector", line_no);
    auto cells = text::split_ws(std::string_view(line).substr(tab + 1));
    if (cells.size() != dim) throw ParseError("embedding vector length mismatch", line_no);
    std::vector<double> v;
    v.reserve(dim);
    for (const auto& c : cells) v.push_back(parse_double(c, line_no));
    model.table.set(line.substr(0, tab), std::move(v));
  }
  model.check();
  return model;
}

LinearModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open model file " + path);
  return read_model(in);
}

std::string write_model(const LinearModel& model) {
  model.check();
  std::ostringstream os;
  os.precision(17);
  os << model.table.dimension() << ' ' << model.labels.size() << ' ' << model.ngram_max << '\n';
  for (const auto& l : model.labels) os << l << '\n';
  for (std::size_t i = 0; i < model.labels.size(); ++i) {
    for (double w : model.weights[i]) os << w << ' ';
    os << model.biases[i] << '\n';
  }
  std::map<std::string, const std::vector<double>*> sorted;
  for (const auto& [unit, v] : model.table.entries()) sorted.emplace(unit, &v);
  for (const auto& [unit, v] : sorted) {
    os << unit << '\t';
    for (std::size_t d = 0; d < v->size(); ++d) os << (d ? " " : "") << (*v)[d];
    os << '\n';
  }
  return os.str();
}

std::vector<double> featurize(const std::vector<std::string>& tokens, const LinearModel& model) {
  const std::size_t dim = model.table.dimension();
  std::vector<double> sum(dim, 0.0);
  std::size_t hits = 0;
  std::string unit;
  for (std::size_t n = 1; n <= model.ngram_max; ++n) {
    if (n > tokens.size()) break;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      unit = tokens[i];
      for (std::size_t j = 1; j < n; ++j) {
        unit += kNgramSeparator;
        unit += tokens[i + j];
      }
      if (const auto* v = model.table.find(unit)) {
        for (std::size_t d = 0; d < dim; ++d) sum[d] += (*v)[d];
        ++hits;
      }
    }
  }
  if (hits > 0)
    for (double& x : sum) x /= static_cast<double>(hits);
  return sum;
}

Ranking rank_features(const std::vector<double>& feature, const LinearModel& model, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  if (feature.size() != model.table.dimension()) throw InvalidArgument("feature length != dimension");
  const std::size_t labels = model.labels.size();
  std::vector<double> scores(labels);
  for (std::size_t l = 0; l < labels; ++l)
    scores[l] = std::inner_product(feature.begin(), feature.end(), model.weights[l].begin(), 0.0) +
                model.biases[l];
  std::vector<std::size_t> order(labels);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  Ranking out;
  for (std::size_t i = 0; i < std::min(k, labels); ++i)
    out.emplace_back(model.labels[order[i]], scores[order[i]]);
  return out;
}

Ranking classify_topk(const std::vector<std::string>& tokens, const LinearModel& model, std::size_t k) {
  return rank_features(featurize(tokens, model), model, k);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json docs = nlohmann::json::object();
  for (const auto& [id, c] : per_document)
    docs[id] = {{"true_positives", c.true_positives}, {"predicted", c.predicted}, {"gold", c.gold}};
  return {{"precision", precision}, {"recall", recall}, {"f1", f1}, {"documents", docs}};
}

std::string EvalReport::to_csv_line() const {
  return format_double(precision) + "," + format_double(recall) + "," + format_double(f1) + "\n";
}

EvalReport evaluate(const LabelSets& predictions, const LabelSets& gold) {
  EvalReport report;
  for (const auto& [id, _] : predictions)
    if (!gold.count(id)) throw InvalidArgument("document '" + id + "' has predictions but no gold labels");
  for (const auto& [id, _] : gold)
    if (!predictions.count(id)) throw InvalidArgument("document '" + id + "' has gold labels but no predictions");

  std::size_t tp = 0, predicted = 0, expected = 0;
  for (const auto& [id, pred_list] : predictions) {
    std::set<std::string> pred(pred_list.begin(), pred_list.end());
    const auto& gold_list = gold.at(id);
    std::set<std::string> truth(gold_list.begin(), gold_list.end());
    DocumentCounts c;
    c.predicted = pred.size();
    c.gold = truth.size();
    for (const auto& l : pred) c.true_positives += truth.count(l);
    tp += c.true_positives;
    predicted += c.predicted;
    expected += c.gold;
    report.per_document[id] = c;
  }
  report.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  report.recall = expected ? static_cast<double>(tp) / static_cast<double>(expected) : 0.0;
  const double pr = report.precision + report.recall;
  report.f1 = pr > 0 ? 2 * report.precision * report.recall / pr : 0.0;
  return report;
}

LabelSets parse_label_sets(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("label set file must be a JSON object");
  LabelSets out;
  for (const auto& [id, labels] : j.items()) {
    if (!labels.is_array()) throw InvalidArgument("labels of '" + id + "' must be an array");
    auto& dst = out[id];
    for (const auto& l : labels) {
      if (!l.is_string()) throw InvalidArgument("labels of '" + id + "' must be strings");
      dst.push_back(l.get<std::string>());
    }
  }
  return out;
}

}  // namespace corpusflow::classify
