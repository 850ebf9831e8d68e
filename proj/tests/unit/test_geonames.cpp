#include <doctest.h>

#include <sstream>

#include "corpusflow/error.hpp"
#include "corpusflow/geonames.hpp"
#include "support.hpp"

using namespace corpusflow;
using namespace corpusflow::geonames;

namespace {

conllu::Document tagged(const std::vector<std::vector<std::string>>& forms, const std::vector<std::string>& tags) {
  auto doc = conllu::ensure_column(testing::tokenized(forms), conllu::kNerColumn);
  std::size_t k = 0, col = doc.column(conllu::kNerColumn);
  for (auto& s : doc.sentences)
    for (auto& t : s.tokens) t.values[col] = tags.at(k++);
  return doc;
}

const GeonamesIndex& fixture_index() {
  static const GeonamesIndex index = load_index(testing::fixture_path("geonames_extract.tsv"));
  return index;
}

}  // namespace

TEST_CASE("fixture extract loads with the expected counts") {
  const auto& index = fixture_index();
  CHECK(index.entry_count() == 102);
  CHECK(index.name_count() == 101);
  CHECK(index.code_count() == 48);
  CHECK(index.warnings() == 1);
  CHECK(index.lookup("Suceava") == std::set<Code>{486885});
  CHECK(index.lookup("SUCZAWA") == std::set<Code>{486885});
  CHECK(index.lookup("baia  mare") == std::set<Code>{686578});
  CHECK(index.lookup("Vulcan").size() == 2);
  CHECK(index.lookup("Baia").empty());
  CHECK(index.lookup("Iasi") == std::set<Code>{675810});
  CHECK(index.lookup("Iași") == std::set<Code>{675810});
}

TEST_CASE("normalization keeps diacritics") {
  CHECK(normalize_name("  Baia\tMare ") == "baia mare");
  CHECK(normalize_name("IAȘI") == "iași");
  CHECK(normalize_name("Iași") != normalize_name("Iasi"));
}

TEST_CASE("malformed extracts") {
  CHECK_THROWS_AS(build_index_from_string("abc\tSuceava\n"), ParseError);
  auto index = build_index_from_string("\n# comment\n1\tA\n2\tB\tC|\n");
  CHECK(index.name_count() == 3);
}

TEST_CASE("dump conversion") {
  std::istringstream dump("486885\tSuceava\tSuceava\tSuczawa,Szucsava,Suceava\t47.6\t26.2\n\nbad\n");
  CHECK(convert_dump(dump) == "486885\tSuceava\tSuczawa|Szucsava\n");
}

TEST_CASE("linking whole LOC expressions") {
  auto doc = tagged({{"Ion", "locuiește", "în", "Suceava"}, {"Apoi", "Baia", "Mare", "și", "Baia"}},
                    {"B-PER", "O", "O", "B-LOC", "O", "B-LOC", "I-LOC", "O", "B-LOC"});
  auto r = link_document(doc, conllu::kNerColumn, fixture_index());
  CHECK(r.document.schema.columns().back() == "RELATE:GEONAMES");
  CHECK(testing::column_values(r.document, "RELATE:GEONAMES") ==
        std::vector<std::string>{"_", "_", "_", "486885", "_", "686578", "686578", "_", "_"});
  CHECK(r.stats.expressions == 3);
  CHECK(r.stats.linked == 2);
  CHECK(r.stats.unmatched == 1);
  CHECK(r.stats.ambiguous == 0);
}

TEST_CASE("ambiguous names stay unlinked; bare IO runs count as one entity") {
  auto doc = tagged({{"Vulcan", "și", "Baia", "Mare"}}, {"LOC", "O", "LOC", "LOC"});
  auto r = link_document(doc, conllu::kNerColumn, fixture_index(), "X:GEO");
  CHECK(testing::column_values(r.document, "X:GEO") == std::vector<std::string>{"_", "_", "686578", "686578"});
  CHECK(r.stats.ambiguous == 1);
  CHECK(r.stats.linked == 1);
  CHECK_THROWS_AS(link_document(testing::tokenized({{"a"}}), conllu::kNerColumn, fixture_index()), InvalidArgument);
}
