#pragma once

// Corpus statistics (CSV) and an offset-addressed Turtle export of
// annotation columns.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpusflow/conllu.hpp"

namespace corpusflow::stats {

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::map<std::string, std::size_t> form_counts;  // case-sensitive FORM frequencies
  std::map<std::string, std::map<std::string, std::size_t>> histograms;

  std::size_t types() const { return form_counts.size(); }
  // Sums scalars and histograms; types follow from the merged vocabulary.
  void merge(const CorpusStats& other);

  bool operator==(const CorpusStats&) const = default;
};

// UPOS plus every namespaced column of the schema.
std::vector<std::string> default_histogram_columns(const conllu::ColumnSchema& schema);

// Counts word tokens only. Histogram values: "B-X" counts one X mention,
// "I-*", "O" and "_" are not counted, anything else counts verbatim.
// Requested columns missing from a document are skipped for that document.
CorpusStats compute_stats(const std::vector<conllu::Document>& docs,
                          const std::optional<std::vector<std::string>>& columns = std::nullopt);

// RFC 4180 field quoting.
std::string csv_field(std::string_view value);

// "metric,value" header, documents/sentences/tokens/types rows, then
// "hist:<column>:<value>,<count>" rows in byte order. LF line endings.
std::string stats_to_csv(const CorpusStats& stats);

// Turtle 1.1. One resource per word token named
// "<base_uri>/<doc_id>#char=<start>,<end>" carrying form plus every requested
// non-"_" column; the document resource lists the tokens in order as an RDF
// collection. With no columns only the document resource is emitted.
std::string export_rdf(const conllu::Document& doc, const std::vector<std::string>& columns,
                       std::string_view base_uri);

// Vocabulary local name for a column: lower case, other characters -> '_'.
std::string rdf_property_name(std::string_view column);

}  // namespace corpusflow::stats
