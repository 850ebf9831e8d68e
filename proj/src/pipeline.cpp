#include "corpusflow/pipeline.hpp"

#include <algorithm>
#include <functional>

#include "corpusflow/error.hpp"
#include "corpusflow/span_annotation.hpp"
#include "corpusflow/text.hpp"

namespace corpusflow::pipeline {

namespace {

using nlohmann::json;

bool is_iob_column(std::string_view column) {
  return column == conllu::kNerColumn || column == conllu::kBioNerColumn;
}

json filtered_token(const json& token, const std::set<std::string>& keys) {
  json out = json::object();
  for (const auto& [key, value] : token.items())
    if (keys.count(key)) out[key] = value;
  return out;
}

// Converts IO tags under `key` to IOB, per sentence, unless the sentence
// already uses B-/I- prefixes.
void normalize_iob(json& sentences, const std::string& key) {
  for (auto& s : sentences) {
    auto tokens = s.find("tokens");
    if (tokens == s.end() || !tokens->is_array()) continue;
    std::vector<std::string> tags;
    bool prefixed = false;
    for (const auto& t : *tokens) {
      auto v = t.find(key);
      std::string tag = (v != t.end() && v->is_string()) ? v->get<std::string>() : "O";
      if (tag.rfind("B-", 0) == 0 || tag.rfind("I-", 0) == 0) prefixed = true;
      tags.push_back(tag);
    }
    if (prefixed) continue;
    auto iob = spans::io_to_iob(tags);
    for (std::size_t i = 0; i < tokens->size(); ++i) (*tokens)[i][key] = iob[i];
  }
}

std::size_t token_total(const json& sentences) {
  std::size_t n = 0;
  for (const auto& s : sentences)
    if (auto t = s.find("tokens"); t != s.end() && t->is_array()) n += t->size();
  return n;
}

}  // namespace

void Registry::add(OperationSpec spec) {
  if (spec.name.empty()) throw InvalidArgument("operation name must not be empty");
  std::string name = spec.name;
  if (!specs_.emplace(name, std::move(spec)).second)
    throw Conflict("operation '" + name + "' already registered");
}

const OperationSpec* Registry::find(std::string_view name) const {
  auto it = specs_.find(name);
  return it == specs_.end() ? nullptr : &it->second;
}

const OperationSpec& Registry::at(std::string_view name) const {
  if (const auto* spec = find(name)) return *spec;
  throw InvalidArgument("unknown operation '" + std::string(name) + "'");
}

const Registry& Registry::standard() {
  static const Registry registry = [] {
    using S = std::set<std::string>;
    const std::string tok(kTokenization), pos(kPosTagging);
    Registry r;
    r.add({std::string(kSentenceSplitting), {}, {}, false});
    r.add({tok, {std::string(kSentenceSplitting)}, {"ID", "FORM"}, false});
    r.add({pos, S{tok}, {"UPOS", "XPOS", "FEATS"}, false});
    r.add({std::string(kLemmatization), S{pos}, {"LEMMA"}, false});
    r.add({std::string(kDependencyParsing), S{pos}, {"HEAD", "DEPREL"}, false});
    r.add({std::string(kChunking), S{pos}, {std::string(conllu::kChunkColumn)}, false});
    r.add({std::string(kNer), S{tok}, {std::string(conllu::kNerColumn)}, false});
    r.add({std::string(kBioNer), S{tok}, {std::string(conllu::kBioNerColumn)}, false});
    r.add({std::string(kHyphenation), S{tok}, {std::string(conllu::kHyphenationColumn)}, false});
    r.add({std::string(kPhoneticTranscription), S{tok}, {std::string(conllu::kPhoneticColumn)}, false});
    r.add({std::string(kDiacriticRestoration), {}, {}, true});
    r.add({std::string(kTextNormalization), {}, {}, true});
    return r;
  }();
  return registry;
}

std::vector<std::string> resolve_operations(const std::set<std::string>& requested,
                                            const Registry& registry) {
  for (const auto& name : requested) registry.at(name);

  std::set<std::string> closure;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    if (!closure.insert(name).second) return;
    const auto* spec = registry.find(name);
    if (!spec) throw Error("registry references unknown operation '" + name + "'");
    for (const auto& dep : spec->dependencies) visit(dep);
  };
  for (const auto& name : requested) visit(name);

  std::map<std::string, std::size_t> pending;
  std::map<std::string, std::vector<std::string>> dependents;
  for (const auto& name : closure) {
    const auto& deps = registry.find(name)->dependencies;
    pending[name] = deps.size();
    for (const auto& dep : deps) dependents[dep].push_back(name);
  }
  std::set<std::pair<int, std::string>> ready;
  auto key = [&](const std::string& name) {
    return std::make_pair(registry.find(name)->raw_text ? 0 : 1, name);
  };
  for (const auto& [name, n] : pending)
    if (n == 0) ready.insert(key(name));

  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string name = ready.begin()->second;
    ready.erase(ready.begin());
    order.push_back(name);
    for (const auto& next : dependents[name])
      if (--pending[next] == 0) ready.insert(key(next));
  }
  if (order.size() != closure.size()) throw Error("operation registry contains a dependency cycle");
  return order;
}

void PipelineConfig::bind_all(const WorkerPtr& worker, const Registry& registry) {
  for (const auto& op : resolve_operations({requested.begin(), requested.end()}, registry))
    worker_binding[op] = worker;
}

conllu::Document annotate_document(const conllu::Document& doc, const PipelineConfig& config,
                                   const Registry& registry) {
  if (doc.raw_text.empty() && doc.sentences.empty()) return doc;
  const auto order = resolve_operations({config.requested.begin(), config.requested.end()}, registry);
  for (const auto& op : order) {
    auto it = config.worker_binding.find(op);
    if (it == config.worker_binding.end() || !it->second)
      throw InvalidArgument("no worker bound for operation '" + op + "'");
  }

  conllu::ColumnSchema schema = doc.schema;
  json state = conllu::to_worker_payload(doc, {});
  for (const auto& op : order) {
    const auto& spec = registry.at(op);
    json request = {{"text", state["text"]}, {"operations", json::array({op})},
                    {"sentences", state["sentences"]}};
    json response = config.worker_binding.at(op)->process(request);
    if (!response.is_object()) throw Error("worker for '" + op + "' returned a non-object response");

    if (auto t = response.find("text"); t != response.end() && t->is_string()) state["text"] = *t;

    std::set<std::string> keys;
    for (const auto& column : spec.produces) keys.insert(conllu::payload_key(column));

    auto sentences = response.find("sentences");
    if (sentences != response.end() && sentences->is_array()) {
      const bool retokenize = spec.produces.count(std::string(conllu::kForm)) > 0;
      if (retokenize || token_total(state["sentences"]) == 0) {
        std::set<std::string> kept = keys;
        kept.insert({"id", "form", "start_char", "end_char"});
        json adopted = json::array();
        for (const auto& s : *sentences) {
          json out = json::object();
          for (const auto& [k, v] : s.items())
            if (k != "tokens") out[k] = v;
          out["tokens"] = json::array();
          if (auto tokens = s.find("tokens"); tokens != s.end() && tokens->is_array())
            for (const auto& t : *tokens) out["tokens"].push_back(filtered_token(t, kept));
          adopted.push_back(std::move(out));
        }
        state["sentences"] = std::move(adopted);
      } else if (!keys.empty()) {
        auto& current = state["sentences"];
        if (sentences->size() != current.size())
          throw Error("worker for '" + op + "' changed the sentence count");
        for (std::size_t si = 0; si < current.size(); ++si) {
          auto& dst = current[si]["tokens"];
          const auto src = (*sentences)[si].value("tokens", json::array());
          if (src.size() != dst.size())
            throw Error("worker for '" + op + "' changed the token count of sentence " +
                        std::to_string(si + 1));
          for (std::size_t ti = 0; ti < dst.size(); ++ti) {
            for (const auto& k : keys) {
              auto v = src[ti].find(k);
              if (v != src[ti].end())
                dst[ti][k] = *v;
              else
                dst[ti].erase(k);
            }
          }
        }
      }
    }
    for (const auto& column : spec.produces) {
      if (is_iob_column(column)) normalize_iob(state["sentences"], conllu::payload_key(column));
      if (!schema.contains(column)) {
        auto columns = schema.columns();
        columns.push_back(column);
        schema = conllu::ColumnSchema(std::move(columns));
      }
    }
  }

  conllu::Document out = conllu::from_worker_payload(state, schema);
  out.doc_id = doc.doc_id;
  out.metadata = doc.metadata;
  out.raw_text = state["text"].get<std::string>();
  return out;
}

nlohmann::json ComparisonReport::to_json() const {
  json j = {{"pipelines", pipelines}, {"columns", columns}, {"tokens", tokens}, {"with_gold", with_gold}};
  j["accuracy"] = accuracy;
  j["agreement"] = agreement;
  json ex = json::object();
  for (const auto& [column, list] : examples) {
    json arr = json::array();
    for (const auto& d : list)
      arr.push_back({{"doc_id", d.doc_id}, {"sentence", d.sentence}, {"token_id", d.token_id},
                     {"form", d.form}, {"values", d.values}});
    ex[column] = std::move(arr);
  }
  j["examples"] = std::move(ex);
  return j;
}

namespace {

struct AlignedToken {
  std::string doc_id;
  std::size_t sentence;
  const conllu::Token* token;
  const conllu::Document* doc;
};

std::vector<AlignedToken> word_tokens(const std::string& doc_id, const conllu::Document& doc) {
  std::vector<AlignedToken> out;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si)
    for (const auto& t : doc.sentences[si].tokens)
      if (t.is_word()) out.push_back({doc_id, si, &t, &doc});
  return out;
}

}  // namespace

ComparisonReport compare_pipelines(const std::vector<PipelineOutput>& outputs,
                                   const std::optional<std::map<std::string, conllu::Document>>& gold,
                                   const std::vector<std::string>& columns) {
  if (outputs.empty()) throw InvalidArgument("no pipeline outputs to compare");
  ComparisonReport report;
  report.columns = columns;
  report.with_gold = gold.has_value();
  for (const auto& o : outputs) {
    if (std::find(report.pipelines.begin(), report.pipelines.end(), o.pipeline_id) != report.pipelines.end())
      throw InvalidArgument("duplicate pipeline id '" + o.pipeline_id + "'");
    report.pipelines.push_back(o.pipeline_id);
  }
  if (gold && std::find(report.pipelines.begin(), report.pipelines.end(), "gold") != report.pipelines.end())
    throw InvalidArgument("pipeline id 'gold' is reserved when a gold layer is given");

  // Sides: every pipeline, then gold last.
  std::vector<std::pair<std::string, const std::map<std::string, conllu::Document>*>> sides;
  for (const auto& o : outputs) sides.emplace_back(o.pipeline_id, &o.documents);
  if (gold) sides.emplace_back("gold", &*gold);

  const auto& reference = *sides.front().second;
  std::vector<std::string> mismatched;
  for (const auto& [name, docs] : sides) {
    if (docs->size() != reference.size()) {
      mismatched.push_back(name);
      continue;
    }
    for (const auto& [id, _] : reference)
      if (!docs->count(id)) mismatched.push_back(name + ":" + id);
  }
  if (!mismatched.empty())
    throw InvalidArgument("layers cover different documents: " + text::join(mismatched, ", "));

  // aligned[side][k] = k-th word token over all documents
  std::vector<std::vector<AlignedToken>> aligned(sides.size());
  std::vector<std::string> bad_docs;
  for (const auto& [doc_id, ref_doc] : reference) {
    auto ref_tokens = word_tokens(doc_id, ref_doc);
    for (std::size_t s = 0; s < sides.size(); ++s) {
      auto tokens = word_tokens(doc_id, sides[s].second->at(doc_id));
      bool same = tokens.size() == ref_tokens.size();
      for (std::size_t i = 0; same && i < tokens.size(); ++i)
        same = tokens[i].token->form() == ref_tokens[i].token->form();
      if (!same && std::find(bad_docs.begin(), bad_docs.end(), doc_id) == bad_docs.end())
        bad_docs.push_back(doc_id);
      aligned[s].insert(aligned[s].end(), tokens.begin(), tokens.end());
    }
  }
  if (!bad_docs.empty())
    throw InvalidArgument("token sequences differ in documents: " + text::join(bad_docs, ", "));

  report.tokens = aligned[0].size();
  const std::size_t n_pipelines = outputs.size();
  for (const auto& column : columns) {
    // Column index per side and document.
    std::vector<std::map<const conllu::Document*, std::size_t>> col_index(sides.size());
    for (std::size_t s = 0; s < sides.size(); ++s)
      for (const auto& [id, doc] : *sides[s].second) {
        auto idx = doc.schema.index_of(column);
        if (!idx)
          throw InvalidArgument("unknown column '" + column + "' in " + sides[s].first + ":" + id);
        col_index[s][&doc] = *idx;
      }
    auto value = [&](std::size_t s, std::size_t k) -> const std::string& {
      const auto& a = aligned[s][k];
      return a.token->values[col_index[s].at(a.doc)];
    };

    const double total = static_cast<double>(report.tokens);
    for (std::size_t a = 0; a < n_pipelines; ++a)
      for (std::size_t b = 0; b < n_pipelines; ++b) {
        std::size_t match = 0;
        for (std::size_t k = 0; k < report.tokens; ++k) match += value(a, k) == value(b, k);
        report.agreement[column][sides[a].first][sides[b].first] =
            report.tokens ? static_cast<double>(match) / total : 1.0;
      }
    if (gold) {
      const std::size_t g = sides.size() - 1;
      for (std::size_t a = 0; a < n_pipelines; ++a) {
        std::size_t match = 0;
        for (std::size_t k = 0; k < report.tokens; ++k) match += value(a, k) == value(g, k);
        report.accuracy[column][sides[a].first] =
            report.tokens ? static_cast<double>(match) / total : 1.0;
      }
    }

    auto& examples = report.examples[column];
    for (std::size_t k = 0; k < report.tokens && examples.size() < kMaxDisagreementExamples; ++k) {
      const std::size_t pivot = gold ? sides.size() - 1 : 0;
      bool differs = false;
      for (std::size_t s = 0; s < n_pipelines; ++s) differs |= value(s, k) != value(pivot, k);
      if (!differs) continue;
      Disagreement d;
      d.doc_id = aligned[0][k].doc_id;
      d.sentence = aligned[0][k].sentence;
      d.token_id = aligned[0][k].token->id();
      d.form = aligned[0][k].token->form();
      for (std::size_t s = 0; s < sides.size(); ++s) d.values[sides[s].first] = value(s, k);
      examples.push_back(std::move(d));
    }
  }
  return report;
}

}  // namespace corpusflow::pipeline
