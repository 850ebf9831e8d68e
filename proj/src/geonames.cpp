#include "corpusflow/geonames.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "corpusflow/error.hpp"
#include "corpusflow/span_annotation.hpp"
#include "corpusflow/text.hpp"

namespace corpusflow::geonames {

std::string normalize_name(std::string_view name) {
  return text::collapse_spaces(text::nfc_casefold(name));
}

void GeonamesIndex::add(std::string_view name, Code code) {
  std::string key = normalize_name(name);
  if (key.empty()) return;
  if (entries_[key].insert(code).second) ++entry_count_;
  codes_.insert(code);
}

const std::set<Code>& GeonamesIndex::lookup(std::string_view name) const {
  static const std::set<Code> none;
  auto it = entries_.find(normalize_name(name));
  return it == entries_.end() ? none : it->second;
}

GeonamesIndex build_index(std::istream& extract) {
  GeonamesIndex index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(extract, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto fields = text::split(line, '\t');
    std::string_view code_field = text::trim(fields[0]);
    Code code = 0;
    auto [ptr, ec] = std::from_chars(code_field.data(), code_field.data() + code_field.size(), code);
    if (code_field.empty() || ec != std::errc() || ptr != code_field.data() + code_field.size() ||
        code == 0)
      throw ParseError("GeoNames code must be a positive integer: '" + std::string(code_field) + "'",
                       line_no);
    if (fields.size() < 2 || text::trim(fields[1]).empty()) {
      index.add_warning();
      continue;
    }
    index.add(fields[1], code);
    if (fields.size() >= 3)
      for (const auto& alt : text::split(fields[2], '|'))
        if (!text::trim(alt).empty()) index.add(alt, code);
  }
  return index;
}

GeonamesIndex build_index_from_string(std::string_view extract) {
  std::istringstream in{std::string(extract)};
  return build_index(in);
}

GeonamesIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open GeoNames extract " + path);
  return build_index(in);
}

std::string convert_dump(std::istream& dump) {
  std::string out;
  std::string line;
  while (std::getline(dump, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = text::split(line, '\t');
    if (fields.size() < 4 || fields[0].empty()) continue;
    std::vector<std::string> alts;
    auto keep = [&](const std::string& n) {
      if (n.empty() || n == fields[1]) return;
      for (const auto& a : alts)
        if (a == n) return;
      alts.push_back(n);
    };
    keep(fields[2]);
    for (const auto& a : text::split(fields[3], ',')) keep(a);
    out += fields[0] + "\t" + fields[1] + "\t" + text::join(alts, "|") + "\n";
  }
  return out;
}

LinkResult link_document(conllu::Document doc, std::string_view ner_column,
                         const GeonamesIndex& index, std::string_view out_column) {
  if (!doc.schema.contains(ner_column))
    throw InvalidArgument("NER column '" + std::string(ner_column) + "' not in schema");
  doc = conllu::ensure_column(std::move(doc), out_column);
  const std::size_t out = doc.column(out_column);
  for (auto& s : doc.sentences)
    for (auto& t : s.tokens) t.values[out] = std::string(conllu::kEmpty);

  LinkResult result;
  for (const auto& mention : spans::entity_mentions(doc, ner_column)) {
    if (mention.label != "LOC") continue;
    ++result.stats.expressions;
    const auto& codes = index.lookup(mention.surface);
    if (codes.empty()) {
      ++result.stats.unmatched;
      continue;
    }
    if (codes.size() > 1) {
      ++result.stats.ambiguous;
      continue;
    }
    ++result.stats.linked;
    const std::string value = std::to_string(*codes.begin());
    auto& tokens = doc.sentences[mention.sentence].tokens;
    for (std::size_t i = mention.first; i <= mention.last; ++i)
      if (tokens[i].is_word()) tokens[i].values[out] = value;
  }
  result.document = std::move(doc);
  return result;
}

}  // namespace corpusflow::geonames
