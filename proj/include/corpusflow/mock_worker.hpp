#pragma once

// Deterministic stand-in for the annotation services: a punctuation-aware
// sentence splitter and tokenizer, suffix-rule POS tags, lower-case lemmas,
// a flat dependency attachment, NP chunks, rule-based hyphenation and
// phonetic transcription, and gazetteer-driven NER that answers in IO tags.
// Speaks the worker wire protocol of pipeline.hpp.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpusflow/conllu.hpp"
#include "corpusflow/pipeline.hpp"
#include "corpusflow/span_annotation.hpp"

namespace corpusflow::mock {

// Sentence boundaries: after a run of . ! ? or an ellipsis that is followed
// by white space or the end of the text. Leading/trailing space is trimmed.
std::vector<conllu::CharSpan> split_sentences(std::u32string_view text);

// Maximal runs of characters that are neither space nor punctuation; each
// punctuation character is a token of its own.
std::vector<conllu::CharSpan> tokenize(std::u32string_view text, conllu::CharSpan range);

std::string pos_tag(std::string_view form);
std::string hyphenate(std::string_view form);
std::string phonetic(std::string_view form);
// Romanian cedilla letters to their comma-below forms.
std::string normalize_text(std::string_view text);

class MockWorker : public pipeline::Worker {
 public:
  explicit MockWorker(spans::Gazetteer ner = {}, spans::Gazetteer biomedical = {});

  // Thread-safe; throws InvalidArgument for unsupported operations.
  nlohmann::json process(const nlohmann::json& request) override;

  static std::set<std::string> supported_operations();

 private:
  struct Matcher {
    std::map<std::vector<std::string>, std::string> entries;  // forms -> label
    std::size_t longest = 0;
  };
  static Matcher build_matcher(const spans::Gazetteer& gazetteer);
  static void tag_entities(nlohmann::json& sentences, const Matcher& matcher, const std::string& key);

  Matcher ner_;
  Matcher biomedical_;
};

}  // namespace corpusflow::mock
