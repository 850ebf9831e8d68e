#include <doctest.h>

#include "corpusflow/error.hpp"
#include "corpusflow/stats.hpp"
#include "support.hpp"

using namespace corpusflow;
using namespace corpusflow::stats;

namespace {

std::vector<conllu::Document> fixture_docs() {
  return {conllu::parse_document(testing::fixture("stats_a.conllup")),
          conllu::parse_document(testing::fixture("stats_b.conllup"))};
}

}  // namespace

TEST_CASE("golden CSV for the fixture layers") {
  auto stats = compute_stats(fixture_docs());
  CHECK(stats.documents == 2);
  CHECK(stats.sentences == 3);
  CHECK(stats.tokens == 17);
  CHECK(stats.types() == 13);
  CHECK(stats_to_csv(stats) == testing::fixture("stats_golden.csv"));
}

TEST_CASE("merge equals computing over the union") {
  auto docs = fixture_docs();
  auto merged = compute_stats({docs[0]});
  merged.merge(compute_stats({docs[1]}));
  CHECK(merged == compute_stats(docs));
}

TEST_CASE("histogram counting rules") {
  auto doc = conllu::ensure_column(testing::tokenized({{"a", "b", "c", "d", "e"}}), "RELATE:NE");
  std::vector<std::string> tags = {"B-PER", "I-PER", "O", "LOC", "_"};
  std::size_t k = 0;
  for (auto& t : doc.sentences[0].tokens) t.values.back() = tags[k++];
  auto s = compute_stats({doc}, std::vector<std::string>{"RELATE:NE", "X:MISSING"});
  CHECK(s.histograms["RELATE:NE"] == std::map<std::string, std::size_t>{{"LOC", 1}, {"PER", 1}});
  CHECK(s.histograms.count("X:MISSING") == 0);
  CHECK(default_histogram_columns(doc.schema) == std::vector<std::string>{"UPOS", "RELATE:NE"});
}

TEST_CASE("csv quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"x\"") == "\"say \"\"x\"\"\"");
  CorpusStats s;
  s.histograms["UPOS"][","] = 2;
  CHECK(stats_to_csv(s).find("\"hist:UPOS:,\",2\n") != std::string::npos);
}

TEST_CASE("turtle export addresses tokens by offsets") {
  auto doc = testing::tokenized({{"Ion", "vine"}});
  doc.doc_id = "știre 1";
  doc.sentences[0].tokens[0].values[3] = "PROPN";
  auto ttl = export_rdf(doc, {"UPOS"}, "http://example.org/c/");
  CHECK(ttl.find("<http://example.org/c/%C8%99tire%201> a cf:Document") != std::string::npos);
  CHECK(ttl.find("<http://example.org/c/%C8%99tire%201#char=0,3> cf:form \"Ion\" ;\n    cf:upos \"PROPN\" .") !=
        std::string::npos);
  CHECK(ttl.find("cf:form \"vine\" .") != std::string::npos);
  auto bare = export_rdf(doc, {}, "http://example.org/c");
  CHECK(bare.find("#char=") == std::string::npos);
  CHECK_THROWS_AS(export_rdf(doc, {"X:NOPE"}, "http://e"), InvalidArgument);
  CHECK(rdf_property_name("RELATE:NE") == "relate_ne");
}
