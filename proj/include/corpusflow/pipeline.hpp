#pragma once

// Annotation operations, their dependency resolution, per-document
// execution against bound workers, and comparison of pipeline outputs.
//
// Worker wire protocol (JSON, UTF-8):
//   request  {"text": str, "operations": [str], "sentences": [...]?}
//   response {"text": str?, "sentences": [{"tokens": [{"id": int, "form": str,
//             "lemma"?, "upos"?, "xpos"?, "feats"?, "head"?, "deprel"?,
//             "ner"?, "start_char"?, "end_char"?}]}]}
// Prior annotation travels in the request "sentences" with the same shape as
// the response, so workers can run on top of earlier operations.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "corpusflow/conllu.hpp"

namespace corpusflow::pipeline {

inline constexpr std::string_view kSentenceSplitting = "sentence-splitting";
inline constexpr std::string_view kTokenization = "tokenization";
inline constexpr std::string_view kPosTagging = "pos-tagging";
inline constexpr std::string_view kLemmatization = "lemmatization";
inline constexpr std::string_view kDependencyParsing = "dependency-parsing";
inline constexpr std::string_view kChunking = "chunking";
inline constexpr std::string_view kNer = "ner";
inline constexpr std::string_view kBioNer = "biomedical-named-entity-recognition";
inline constexpr std::string_view kHyphenation = "hyphenation";
inline constexpr std::string_view kPhoneticTranscription = "phonetic-transcription";
inline constexpr std::string_view kDiacriticRestoration = "diacritic-restoration";
inline constexpr std::string_view kTextNormalization = "text-normalization";

struct OperationSpec {
  std::string name;
  std::set<std::string> dependencies;  // operations that must run first
  std::set<std::string> produces;  // column names
  // Operations that rewrite the raw text are ordered ahead of the others
  // whenever the dependency order leaves a choice.
  bool raw_text = false;
};

class Registry {
 public:
  // Throws Conflict on a duplicate name.
  void add(OperationSpec spec);
  const OperationSpec* find(std::string_view name) const;
  const OperationSpec& at(std::string_view name) const;  // throws InvalidArgument
  const std::map<std::string, OperationSpec, std::less<>>& specs() const { return specs_; }

  static const Registry& standard();

 private:
  std::map<std::string, OperationSpec, std::less<>> specs_;
};

// Dependency closure of `requested` in topological order. Among ready
// operations raw-text ones come first, then lexicographic by name.
// Throws InvalidArgument for unknown names, Error for a cycle.
std::vector<std::string> resolve_operations(const std::set<std::string>& requested,
                                            const Registry& registry = Registry::standard());

class Worker {
 public:
  virtual ~Worker() = default;
  // Throws on any transport or worker failure.
  virtual nlohmann::json process(const nlohmann::json& request) = 0;
};

using WorkerPtr = std::shared_ptr<Worker>;

struct PipelineConfig {
  std::string pipeline_id;
  std::vector<std::string> requested;
  std::map<std::string, WorkerPtr> worker_binding;  // operation -> worker

  // Binds every operation the request resolves to onto one worker.
  void bind_all(const WorkerPtr& worker, const Registry& registry = Registry::standard());
};

// Runs the resolved operations in order, one worker request each. Columns an
// operation produces are ensured on the schema and filled from the worker
// response; other columns keep their prior values. A tokenizing operation
// replaces the token table. IO tags in the NE columns become IOB.
conllu::Document annotate_document(const conllu::Document& doc, const PipelineConfig& config,
                                   const Registry& registry = Registry::standard());

struct PipelineOutput {
  std::string pipeline_id;
  std::map<std::string, conllu::Document> documents;  // doc_id -> layer
};

struct Disagreement {
  std::string doc_id;
  std::size_t sentence = 0;
  std::string token_id;
  std::string form;
  std::map<std::string, std::string> values;  // pipeline (or "gold") -> value
};

struct ComparisonReport {
  std::vector<std::string> pipelines;
  std::vector<std::string> columns;
  std::size_t tokens = 0;
  bool with_gold = false;
  // column -> pipeline -> accuracy against gold
  std::map<std::string, std::map<std::string, double>> accuracy;
  // column -> pipeline -> pipeline -> token agreement
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> agreement;
  // column -> first 10 tokens that disagree
  std::map<std::string, std::vector<Disagreement>> examples;

  nlohmann::json to_json() const;
};

inline constexpr std::size_t kMaxDisagreementExamples = 10;

// Agreement is raw token accuracy over word tokens; with zero tokens every
// score is 1. All layers must cover the same documents with identical FORM
// sequences.
ComparisonReport compare_pipelines(const std::vector<PipelineOutput>& outputs,
                                   const std::optional<std::map<std::string, conllu::Document>>& gold,
                                   const std::vector<std::string>& columns);

}  // namespace corpusflow::pipeline
