#include <doctest.h>

#include "corpusflow/error.hpp"
#include "corpusflow/mock_worker.hpp"
#include "corpusflow/pipeline.hpp"
#include "corpusflow/text.hpp"
#include "support.hpp"

using namespace corpusflow;
using namespace corpusflow::pipeline;

namespace {

// Records the operations it is asked for and delegates to the mock.
class RecordingWorker : public Worker {
 public:
  std::vector<std::string> seen;
  mock::MockWorker inner;
  nlohmann::json process(const nlohmann::json& request) override {
    for (const auto& op : request["operations"]) seen.push_back(op.get<std::string>());
    return inner.process(request);
  }
};

class BrokenWorker : public Worker {
 public:
  nlohmann::json process(const nlohmann::json& request) override {
    auto response = mock::MockWorker().process(request);
    if (request["operations"][0] == "pos-tagging") response["sentences"].push_back(response["sentences"][0]);
    return response;
  }
};

conllu::Document raw(const std::string& text) {
  conllu::Document doc;
  doc.doc_id = "d";
  doc.raw_text = text;
  return doc;
}

}  // namespace

TEST_CASE("POS tagging pulls in splitting and tokenization first") {
  auto order = resolve_operations({"pos-tagging"});
  CHECK(order == std::vector<std::string>{"sentence-splitting", "tokenization", "pos-tagging"});
  auto full = resolve_operations({"dependency-parsing", "ner", "text-normalization"});
  CHECK(full.front() == "text-normalization");
  CHECK(full.size() == 6);
  CHECK_THROWS_AS(resolve_operations({"levitation"}), InvalidArgument);
}

TEST_CASE("cycles are reported") {
  Registry r;
  r.add({"a", {"b"}, {}, false});
  r.add({"b", {"a"}, {}, false});
  CHECK_THROWS_AS(resolve_operations({"a"}, r), Error);
  CHECK_THROWS_AS(r.add({"a", {}, {}, false}), Conflict);
}

TEST_CASE("annotate runs one request per resolved operation") {
  auto worker = std::make_shared<RecordingWorker>();
  PipelineConfig config{"mock", {"lemmatization", "dependency-parsing"}, {}};
  config.bind_all(worker);
  auto doc = annotate_document(raw("Ion citește o carte. El doarme!"), config);
  CHECK(worker->seen == std::vector<std::string>{"sentence-splitting", "tokenization", "pos-tagging",
                                                  "dependency-parsing", "lemmatization"});
  REQUIRE(doc.sentences.size() == 2);
  CHECK(doc.sentences[0].tokens.size() == 5);
  CHECK(doc.schema.is_canonical());
  const auto& t = doc.sentences[0].tokens[1];
  CHECK(t.form() == "citește");
  CHECK(t.values[doc.column("UPOS")] == "VERB");
  CHECK(t.values[doc.column("DEPREL")] == "root");
  CHECK(t.values[doc.column("LEMMA")] == "citește");
  REQUIRE(t.offsets);
  CHECK(*t.offsets == conllu::CharSpan{4, 11});
  CHECK(doc.doc_id == "d");
  CHECK_NOTHROW(conllu::validate(doc));
}

TEST_CASE("NER tags arrive as IOB in the NE column") {
  spans::Gazetteer g;
  g.entries = {{"LOC", "Baia Mare"}, {"PER", "Ion"}};
  auto worker = std::make_shared<mock::MockWorker>(g);
  PipelineConfig config{"mock", {"ner"}, {}};
  config.bind_all(worker);
  auto doc = annotate_document(raw("Ion merge la Baia Mare."), config);
  CHECK(testing::column_values(doc, "RELATE:NE") ==
        std::vector<std::string>{"B-PER", "O", "O", "B-LOC", "I-LOC", "O"});
  CHECK(doc.schema.columns().back() == "RELATE:NE");
}

TEST_CASE("text normalization rewrites the raw text before tokenizing") {
  auto worker = std::make_shared<mock::MockWorker>();
  PipelineConfig config{"mock", {"text-normalization", "tokenization"}, {}};
  config.bind_all(worker);
  auto doc = annotate_document(raw("Ştefan ţine"), config);
  CHECK(doc.raw_text == "Ștefan ține");
  CHECK(doc.sentences[0].tokens[0].form() == "Ștefan");
}

TEST_CASE("unbound operations and inconsistent workers fail") {
  PipelineConfig empty{"x", {"pos-tagging"}, {}};
  CHECK_THROWS_AS(annotate_document(raw("a b"), empty), InvalidArgument);
  PipelineConfig broken{"x", {"pos-tagging"}, {}};
  broken.bind_all(std::make_shared<BrokenWorker>());
  CHECK_THROWS_AS(annotate_document(raw("Ana are mere."), broken), Error);
}

TEST_CASE("mock splitter and tokenizer") {
  auto text = text::decode_utf8("  Da... Nu!  Poate? 3.5 e un număr");
  auto sentences = mock::split_sentences(text);
  REQUIRE(sentences.size() == 4);
  CHECK(sentences[0] == conllu::CharSpan{2, 7});
  auto tokens = mock::tokenize(text, sentences[3]);
  std::vector<std::string> forms;
  for (auto t : tokens) forms.push_back(text::encode_utf8(text.substr(t.start, t.end - t.start)));
  CHECK(forms == std::vector<std::string>{"3", ".", "5", "e", "un", "număr"});
  CHECK(mock::pos_tag("Suceava") == "PROPN");
  CHECK(mock::pos_tag("în") == "ADP");
  CHECK(mock::hyphenate("mere") == "me-re");
  CHECK(mock::phonetic("ceai") == "tSeai");
}

TEST_CASE("pipeline comparison against gold") {
  auto base = testing::tokenized({{"Ion", "vine"}, {"Da", "."}}, conllu::ColumnSchema({"ID", "FORM", "UPOS"}));
  auto a = base, b = base, gold = base;
  auto set = [](conllu::Document& d, std::vector<std::string> tags) {
    std::size_t k = 0;
    for (auto& s : d.sentences)
      for (auto& t : s.tokens) t.values[2] = tags[k++];
  };
  set(gold, {"PROPN", "VERB", "INTJ", "PUNCT"});
  set(a, {"PROPN", "VERB", "INTJ", "PUNCT"});
  set(b, {"NOUN", "VERB", "ADV", "PUNCT"});
  auto report = compare_pipelines({{"a", {{"d", a}}}, {"b", {{"d", b}}}}, std::map<std::string, conllu::Document>{{"d", gold}},
                                  {"UPOS"});
  CHECK(report.tokens == 4);
  CHECK(report.accuracy["UPOS"]["a"] == doctest::Approx(1.0));
  CHECK(report.accuracy["UPOS"]["b"] == doctest::Approx(0.5));
  CHECK(report.agreement["UPOS"]["a"]["b"] == doctest::Approx(0.5));
  CHECK(report.agreement["UPOS"]["b"]["b"] == doctest::Approx(1.0));
  REQUIRE(report.examples["UPOS"].size() == 2);
  CHECK(report.examples["UPOS"][0].form == "Ion");
  CHECK(report.examples["UPOS"][0].values.at("gold") == "PROPN");

  auto other = testing::tokenized({{"Ion", "pleacă"}, {"Da", "."}}, conllu::ColumnSchema({"ID", "FORM", "UPOS"}));
  CHECK_THROWS_AS(compare_pipelines({{"a", {{"d", a}}}, {"c", {{"d", other}}}}, std::nullopt, {"UPOS"}),
                  InvalidArgument);
  CHECK_THROWS_AS(compare_pipelines({{"a", {{"d", a}}}, {"b", {{"e", b}}}}, std::nullopt, {"UPOS"}), InvalidArgument);
  auto empty = compare_pipelines({{"a", {}}, {"b", {}}}, std::nullopt, {"UPOS"});
  CHECK(empty.tokens == 0);
  CHECK(empty.agreement["UPOS"]["a"]["b"] == 1.0);
}
