#include <doctest.h>

#include "corpusflow/conllu.hpp"
#include "corpusflow/error.hpp"
#include "support.hpp"

using namespace corpusflow;
using namespace corpusflow::conllu;

TEST_CASE("canonical fixture parses with offsets, ranges and empty nodes") {
  auto doc = parse_document(testing::fixture("canonical.conllu"));
  CHECK(doc.schema.is_canonical());
  REQUIRE(doc.sentences.size() == 3);
  CHECK(doc.sentences[0].comments == std::vector<std::string>{"sent_id = 1", "text = Ion citește."});
  const auto& t = doc.sentences[0].tokens[1];
  CHECK(t.form() == "citește");
  REQUIRE(t.offsets);
  CHECK(*t.offsets == CharSpan{4, 11});
  CHECK(t.values[9] == "SpaceAfter=No");
  CHECK(doc.sentences[0].tokens[0].values[9] == "_");
  CHECK(doc.sentences[1].tokens[2].is_multiword());
  CHECK(doc.sentences[2].tokens[1].is_empty_node());
  CHECK(doc.word_count() == 3 + 6 + 1);
}

TEST_CASE("fixtures re-serialize byte for byte") {
  auto canonical = testing::fixture("canonical.conllu");
  CHECK(serialize_document(parse_document(canonical), false) == canonical);
  auto plus = testing::fixture("canonical_plus.conllup");
  auto doc = parse_document(plus);
  CHECK(doc.doc_id == "plus-1");
  CHECK(doc.metadata.at("source") == "fixture");
  CHECK(doc.schema.columns().back() == "RELATE:GEONAMES");
  CHECK(serialize_document(doc) == plus);
}

TEST_CASE("CRLF input is accepted, output is LF") {
  std::string crlf = "# sent_id = 1\r\n1\ta\t_\t_\t_\t_\t_\t_\t_\t_\r\n\r\n";
  auto doc = parse_document(crlf);
  CHECK(doc.sentences[0].comments[0] == "sent_id = 1");
  CHECK(serialize_document(doc, false).find('\r') == std::string::npos);
}

TEST_CASE("schema rules") {
  CHECK_THROWS_AS(ColumnSchema({"FORM", "ID"}), InvalidArgument);
  CHECK_THROWS_AS(ColumnSchema({"ID", "FORM", "FORM"}), InvalidArgument);
  CHECK_THROWS_AS(ColumnSchema({"ID", "FORM", "NOCOLON"}), InvalidArgument);
  CHECK_NOTHROW(ColumnSchema({"ID", "FORM", "RELATE:NE"}));
  CHECK(is_valid_column_name("A:B"));
  CHECK_FALSE(is_valid_column_name(":B"));
  CHECK_FALSE(is_valid_column_name("A:"));
  CHECK_FALSE(is_valid_column_name("A :B"));
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_document("1\ta\t_\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  CHECK_THROWS_AS(parse_document("# global.columns = ID FORM\n1\ta\n2\tb\tc\n"), ParseError);
  CHECK_THROWS_AS(parse_document("# global.columns = ID FORM\n2\ta\n\n"), ParseError);
  CHECK_THROWS_AS(parse_document("# global.columns = ID FORM\n# orphan\n\n"), ParseError);
  CHECK_THROWS_AS(parse_document("\xC3\n"), ParseError);
}

TEST_CASE("validate rejects broken invariants") {
  auto doc = parse_document(testing::fixture("canonical_plus.conllup"));
  CHECK_NOTHROW(validate(doc));
  auto bad = doc;
  bad.sentences[0].tokens[0].values[2] = "";
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = doc;
  bad.sentences[0].comments.push_back("meta::x = y");
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = doc;
  bad.metadata["bad key"] = "v";
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = doc;
  bad.sentences[0].tokens.pop_back();
  bad.sentences[0].tokens.front().values[0] = "2";
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
  bad = doc;
  bad.raw_text = "abc";
  bad.sentences[0].tokens[0].offsets = CharSpan{1, 9};
  CHECK_THROWS_AS(validate(bad), InvalidArgument);
}

TEST_CASE("ensure_column appends and respects canonical order") {
  auto doc = parse_document(testing::fixture("canonical.conllu"));
  auto extended = ensure_column(doc, "RELATE:NE", "O");
  CHECK(extended.schema.columns().back() == "RELATE:NE");
  CHECK(extended.sentences[1].tokens[0].values.back() == "O");
  CHECK(ensure_column(extended, "RELATE:NE").schema == extended.schema);

  Document small;
  small.schema = ColumnSchema({"ID", "FORM", "UPOS"});
  CHECK_NOTHROW(ensure_column(small, "MISC"));
  CHECK_THROWS_AS(ensure_column(small, "LEMMA"), InvalidArgument);
}

TEST_CASE("worker payload round trip") {
  auto doc = parse_document(testing::fixture("canonical.conllu"));
  doc.raw_text = "Ion citește.";
  auto payload = to_worker_payload(doc, {"pos-tagging"});
  CHECK(payload["operations"][0] == "pos-tagging");
  CHECK(payload["sentences"][0]["tokens"][0]["id"] == 1);
  CHECK(payload["sentences"][0]["tokens"][1]["upos"] == "VERB");
  CHECK(payload["sentences"][0]["tokens"][1]["start_char"] == 4);
  CHECK(payload["sentences"][1]["tokens"][2]["id"] == "3-4");
  auto back = from_worker_payload(payload, doc.schema);
  CHECK(same_annotation(back, doc));
  CHECK(back.raw_text == doc.raw_text);

  CHECK(payload_key("RELATE:NE") == "ner");
  CHECK(payload_key("UPOS") == "upos");
  CHECK(column_for_payload_key("deprel") == "DEPREL");
  CHECK(column_for_payload_key("RELATE:GEONAMES") == "RELATE:GEONAMES");
  CHECK_THROWS_AS(from_worker_payload(nlohmann::json{{"sentences", {{{"tokens", {{{"form", "a"}, {"X:Y", "b"}}}}}}}},
                                      ColumnSchema::canonical()),
                  InvalidArgument);
}

TEST_CASE("serialization writes the header for non-canonical schemas") {
  Document doc;
  doc.schema = ColumnSchema({"ID", "FORM", "RELATE:NE"});
  Sentence s;
  s.tokens.push_back(Token{{"1", "Ion", "B-PER"}, std::nullopt});
  doc.sentences.push_back(s);
  auto text = serialize_document(doc, false);
  CHECK(text == "# global.columns = ID FORM RELATE:NE\n1\tIon\tB-PER\n\n");
  CHECK(parse_document(text) == doc);
}
