#include "corpusflow/service.hpp"

#include <fstream>
#include <sstream>

#include "corpusflow/error.hpp"
#include "corpusflow/mock_worker.hpp"
#include "corpusflow/stats.hpp"
#include "corpusflow/text.hpp"
#include "corpusflow/worker_client.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace corpusflow {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string param(const tasks::Assignment& a, const std::string& key, std::string fallback = {}) {
  auto it = a.params.find(key);
  return it == a.params.end() || it->second.empty() ? fallback : it->second;
}

std::vector<std::string> list_param(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& part : text::split(value, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::set<std::string> local_operations() {
  std::set<std::string> ops;
  for (auto kind : tasks::all_kinds())
    if (kind != tasks::TaskKind::annotate) ops.insert(std::string(tasks::to_string(kind)));
  return ops;
}

std::vector<std::string> word_forms(const conllu::Document& doc) {
  std::vector<std::string> forms;
  for (const auto& s : doc.sentences)
    for (const auto& t : s.tokens)
      if (t.is_word()) forms.push_back(t.form());
  return forms;
}

}  // namespace

json ComponentDescriptor::to_json() const {
  return {{"name", name}, {"version", version}, {"endpoints", endpoints}, {"public", is_public}};
}

Service::Service(ServiceOptions options) : options_(std::move(options)), root_(options_.config.storage_root) {
  fs::create_directories(root_ / "uploads");
  store_ = std::make_unique<store::CorpusStore>(root_ / "corpora");

  tasks::EngineOptions eo;
  eo.max_attempts = options_.config.max_attempts;
  eo.dead_after_failures = options_.config.dead_after_failures;
  eo.unit_timeout = std::chrono::seconds(options_.config.unit_timeout_s);
  engine_ = std::make_unique<tasks::TaskEngine>(
      [this](const std::string& corpus_id) -> std::optional<std::vector<std::string>> {
        if (!store_->has_corpus(corpus_id)) return std::nullopt;
        return store_->list_documents(corpus_id);
      },
      [this](const tasks::Assignment& a, const tasks::UnitResult& r) { return persist(a, r); }, eo);
  engine_->register_worker("inproc://local", local_operations(), options_.config.local_workers, true,
                           std::string(kLocalNode));

  if (options_.persist_queue && fs::exists(queue_path())) {
    json snap;
    try {
      snap = json::parse(read_file(queue_path().string()));
    } catch (const json::exception& e) {
      throw Error("corrupt queue snapshot " + queue_path().string() + ": " + e.what());
    }
    engine_->restore(snap);
  }

  tasks::RuntimeOptions ro;
  ro.tick = options_.tick;
  ro.heartbeat = std::chrono::seconds(options_.config.heartbeat_interval_s);
  runtime_ = std::make_unique<tasks::Runtime>(
      *engine_, [this](const tasks::Assignment& a) { return execute(a); },
      [this](const tasks::WorkerNode& n) { return probe(n); }, ro);
}

Service::~Service() {
  try {
    shutdown();
  } catch (...) {
  }
}

void Service::start() {
  if (started_) return;
  runtime_->start();
  started_ = true;
}

void Service::shutdown() {
  if (!started_) return;
  runtime_->stop();
  started_ = false;
  if (options_.persist_queue) save_queue();
}

fs::path Service::queue_path() const { return root_ / "queue.json"; }

void Service::save_queue() const {
  fs::path tmp = queue_path();
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << engine_->snapshot().dump(1) << "\n";
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, queue_path());
}

std::string Service::submit(std::string_view kind, const std::string& corpus_id,
                            std::map<std::string, std::string> params) {
  auto k = tasks::parse_kind(kind);
  if (!k) throw InvalidArgument("unknown task kind: " + std::string(kind));
  auto id = engine_->submit_task(*k, corpus_id, std::move(params));
  runtime_->wake();
  return id;
}

std::string Service::upload_archive(const std::string& corpus_id, std::string_view archive) {
  if (!store::is_valid_identifier(corpus_id)) throw InvalidArgument("invalid corpus id: '" + corpus_id + "'");
  fs::path path;
  {
    std::lock_guard lock(upload_mutex_);
    do {
      path = root_ / "uploads" / (corpus_id + "-" + std::to_string(++upload_counter_) + ".zip");
    } while (fs::exists(path));
    std::ofstream out(path, std::ios::binary);
    out.write(archive.data(), static_cast<std::streamsize>(archive.size()));
    if (!out) throw Error("cannot store upload " + path.string());
  }
  return submit("extract_archive", corpus_id, {{"archive", path.string()}});
}

tasks::Task Service::wait(const std::string& task_id, std::chrono::milliseconds timeout) {
  if (!runtime_->wait(task_id, timeout)) throw Error("task " + task_id + " did not finish in time");
  return engine_->task(task_id);
}

std::string Service::register_worker(const std::string& endpoint, std::set<std::string> operations,
                                     std::optional<std::size_t> max_inflight) {
  auto ep = workers::parse_endpoint(endpoint);
  if (ep.scheme == "mock") {
    auto supported = mock::MockWorker::supported_operations();
    for (const auto& op : operations)
      if (!supported.count(op)) throw InvalidArgument("mock workers do not support " + op);
  }
  auto id = engine_->register_worker(endpoint, std::move(operations),
                                     max_inflight.value_or(options_.config.default_max_inflight));
  runtime_->wake();
  return id;
}

void Service::deregister_worker(const std::string& node_id) {
  if (node_id == kLocalNode) throw InvalidArgument("the local node cannot be deregistered");
  engine_->deregister_worker(node_id);
  runtime_->wake();
}

std::vector<ComponentDescriptor> Service::components() const {
  std::string v(kVersion);
  return {
      {"corpora", v,
       {"POST /corpora", "GET /corpora/{id}", "GET /corpora/{id}/export",
        "GET /corpora/{id}/artifacts/{name}"},
       true},
      {"tasks", v, {"POST /tasks", "GET /tasks/{id}"}, true},
      {"components", v, {"GET /components"}, true},
      {"workers", v, {"POST /workers", "GET /workers", "DELETE /workers/{id}"}, false},
  };
}

pipeline::WorkerPtr Service::worker_for(const std::string& endpoint) {
  auto ep = workers::parse_endpoint(endpoint);
  if (ep.scheme == "mock") {
    std::lock_guard lock(cache_mutex_);
    auto& w = mock_workers_[endpoint];
    if (!w) w = std::make_shared<mock::MockWorker>(options_.mock_ner, options_.mock_biomedical);
    return w;
  }
  return std::make_shared<workers::HttpWorker>(endpoint, std::chrono::seconds(options_.config.unit_timeout_s),
                                               options_.config.bearer_token);
}

bool Service::probe(const tasks::WorkerNode& node) {
  auto ep = workers::parse_endpoint(node.endpoint);
  if (ep.scheme == "mock") return true;
  workers::HttpWorker w(node.endpoint, std::chrono::seconds(2), options_.config.bearer_token);
  return w.healthy();
}

std::shared_ptr<const geonames::GeonamesIndex> Service::index(const std::string& path) {
  if (!fs::exists(path)) throw NotFound("GeoNames extract not found: " + path);
  auto mtime = fs::last_write_time(path);
  {
    std::lock_guard lock(cache_mutex_);
    auto it = indexes_.find(path);
    if (it != indexes_.end() && it->second.first == mtime) return it->second.second;
  }
  auto built = std::make_shared<const geonames::GeonamesIndex>(geonames::load_index(path));
  std::lock_guard lock(cache_mutex_);
  indexes_[path] = {mtime, built};
  return built;
}

std::shared_ptr<const classify::LinearModel> Service::model(const std::string& path) {
  if (!fs::exists(path)) throw NotFound("model not found: " + path);
  auto mtime = fs::last_write_time(path);
  {
    std::lock_guard lock(cache_mutex_);
    auto it = models_.find(path);
    if (it != models_.end() && it->second.first == mtime) return it->second.second;
  }
  auto loaded = std::make_shared<const classify::LinearModel>(classify::load_model(path));
  std::lock_guard lock(cache_mutex_);
  models_[path] = {mtime, loaded};
  return loaded;
}

std::vector<conllu::Document> Service::load_layers(const std::string& corpus_id,
                                                   const std::string& layer) const {
  std::vector<conllu::Document> docs;
  for (const auto& id : store_->list_documents(corpus_id))
    if (store_->has_layer(corpus_id, id, layer)) docs.push_back(store_->load_layer(corpus_id, id, layer));
  if (docs.empty() && !store_->list_documents(corpus_id).empty())
    throw NotFound("no document of corpus " + corpus_id + " has layer '" + layer + "'");
  return docs;
}

tasks::UnitResult Service::execute(const tasks::Assignment& a) {
  using tasks::TaskKind;
  switch (a.kind) {
    case TaskKind::extract_archive: return run_extract(a);
    case TaskKind::annotate: return run_annotate(a);
    case TaskKind::convert_spans: return run_convert_spans(a);
    case TaskKind::gazetteer: return run_gazetteer(a);
    case TaskKind::classify: return run_classify(a);
    case TaskKind::geonames_link: return run_geonames(a);
    case TaskKind::anonymize: return run_anonymize(a);
    case TaskKind::stats: return run_stats(a);
    case TaskKind::rdf_export: return run_rdf(a);
    case TaskKind::export_archive: return run_export(a);
    case TaskKind::compare_pipelines: return run_compare(a);
  }
  throw Error("unhandled task kind");
}

json Service::persist(const tasks::Assignment& a, const tasks::UnitResult& r) {
  json summary;
  if (r.archive) {
    auto report = store_->ingest_archive(a.corpus_id, *r.archive);
    summary = report.to_json();
    std::error_code ec;
    fs::remove(param(a, "archive"), ec);
  }
  for (const auto& l : r.layers) store_->attach_annotation(a.corpus_id, l.doc_id, l.layer, l.document);
  for (const auto& art : r.artifacts) store_->put_artifact(a.corpus_id, art.name, art.content);
  return summary;
}

tasks::UnitResult Service::run_extract(const tasks::Assignment& a) {
  tasks::UnitResult r;
  r.archive = read_file(param(a, "archive"));
  return r;
}

tasks::UnitResult Service::run_annotate(const tasks::Assignment& a) {
  conllu::Document doc;
  doc.doc_id = a.doc_id;
  doc.raw_text = store_->raw_text(a.corpus_id, a.doc_id);
  doc.metadata = store_->document(a.corpus_id, a.doc_id).metadata;

  pipeline::PipelineConfig cfg;
  cfg.pipeline_id = param(a, "pipeline_id", a.endpoint);
  cfg.requested = list_param(param(a, "operations"));
  cfg.bind_all(worker_for(a.endpoint));
  auto annotated = pipeline::annotate_document(doc, cfg);

  tasks::UnitResult r;
  r.summary = {{"sentences", annotated.sentences.size()}, {"tokens", annotated.word_count()},
               {"node", a.node_id}};
  r.layers.push_back({a.doc_id, param(a, "layer", std::string(kDefaultLayer)), std::move(annotated)});
  return r;
}

tasks::UnitResult Service::run_convert_spans(const tasks::Assignment& a) {
  auto layer = param(a, "layer");
  auto doc = store_->load_layer(a.corpus_id, a.doc_id, layer);
  auto rec = store_->document(a.corpus_id, a.doc_id);
  std::vector<spans::StandoffSpan> s = rec.spans.value_or(std::vector<spans::StandoffSpan>{});
  auto converted = spans::spans_to_iob(std::move(doc), s, param(a, "column", std::string(conllu::kNerColumn)));
  tasks::UnitResult r;
  r.summary = {{"spans", s.size()}, {"accepted", spans::resolve_overlaps(s).size()}};
  r.layers.push_back({a.doc_id, param(a, "output_layer", layer), std::move(converted)});
  return r;
}

tasks::UnitResult Service::run_geonames(const tasks::Assignment& a) {
  auto layer = param(a, "layer");
  auto idx = index(param(a, "index"));
  auto linked = geonames::link_document(store_->load_layer(a.corpus_id, a.doc_id, layer),
                                        param(a, "ner_column", std::string(conllu::kNerColumn)), *idx);
  tasks::UnitResult r;
  r.summary = {{"expressions", linked.stats.expressions},
               {"linked", linked.stats.linked},
               {"unmatched", linked.stats.unmatched},
               {"ambiguous", linked.stats.ambiguous}};
  r.layers.push_back({a.doc_id, param(a, "output_layer", layer), std::move(linked.document)});
  return r;
}

std::shared_ptr<const spans::SurfaceList> Service::corpus_surfaces(
    const tasks::Assignment& a, const std::string& layer, const std::string& column,
    const std::set<std::string>& labels) {
  std::lock_guard lock(surfaces_mutex_);
  for (auto it = surfaces_.begin(); it != surfaces_.end();)
    it = engine_->is_finished(it->first) ? surfaces_.erase(it) : std::next(it);
  auto& slot = surfaces_[a.task_id];
  if (!slot) {
    std::vector<conllu::Document> docs;
    for (const auto& id : store_->list_documents(a.corpus_id))
      if (store_->has_layer(a.corpus_id, id, layer)) docs.push_back(store_->load_layer(a.corpus_id, id, layer));
    slot = std::make_shared<const spans::SurfaceList>(spans::collect_surfaces(docs, column, labels));
  }
  return slot;
}

tasks::UnitResult Service::run_anonymize(const tasks::Assignment& a) {
  auto layer = param(a, "layer");
  auto labels = list_param(param(a, "labels"));
  const std::set<std::string> label_set(labels.begin(), labels.end());
  const auto column = param(a, "column", std::string(conllu::kNerColumn));
  auto surfaces = corpus_surfaces(a, layer, column, label_set);
  auto result = spans::anonymize_document(store_->load_layer(a.corpus_id, a.doc_id, layer), column,
                                          label_set, surfaces.get());
  json mapping = json::array();
  for (const auto& [placeholder, surface] : result.mapping)
    mapping.push_back({{"placeholder", placeholder}, {"surface", surface}});
  tasks::UnitResult r;
  r.summary = {{"replaced", result.mapping.size()}};
  r.layers.push_back({a.doc_id, param(a, "output_layer", layer + "-anon"), std::move(result.document)});
  r.artifacts.push_back({a.task_id + "/" + a.doc_id + ".mapping.json", mapping.dump(2) + "\n"});
  return r;
}

tasks::UnitResult Service::run_rdf(const tasks::Assignment& a) {
  auto doc = store_->load_layer(a.corpus_id, a.doc_id, param(a, "layer"));
  std::vector<std::string> columns;
  if (a.params.count("columns")) {
    columns = list_param(param(a, "columns"));
  } else {
    for (const auto& c : doc.schema.columns())
      if (c != conllu::kId && c != conllu::kForm && c != conllu::kMisc) columns.push_back(c);
  }
  tasks::UnitResult r;
  r.artifacts.push_back({a.task_id + "/" + a.doc_id + ".ttl", stats::export_rdf(doc, columns, param(a, "base_uri"))});
  r.summary = {{"tokens", doc.word_count()}};
  return r;
}

tasks::UnitResult Service::run_gazetteer(const tasks::Assignment& a) {
  auto docs = load_layers(a.corpus_id, param(a, "layer"));
  auto gaz = spans::extract_gazetteer(docs, param(a, "column", std::string(conllu::kNerColumn)));
  tasks::UnitResult r;
  r.summary = {{"entries", gaz.entries.size()}, {"repaired", gaz.repaired}};
  r.artifacts.push_back({a.task_id + "/gazetteer.tsv", gaz.to_tsv()});
  return r;
}

tasks::UnitResult Service::run_classify(const tasks::Assignment& a) {
  auto m = model(param(a, "model"));
  std::size_t k = std::stoul(param(a, "k", std::to_string(classify::kDefaultTopK)));
  auto docs = load_layers(a.corpus_id, param(a, "layer"));
  json predictions = json::object();
  classify::LabelSets predicted;
  for (const auto& doc : docs) {
    auto ranking = classify::classify_topk(word_forms(doc), *m, k);
    json entries = json::array();
    for (const auto& [label, score] : ranking) {
      entries.push_back({{"label", label}, {"score", score}});
      predicted[doc.doc_id].push_back(label);
    }
    if (ranking.empty()) predicted[doc.doc_id];
    predictions[doc.doc_id] = entries;
  }
  tasks::UnitResult r;
  r.summary = {{"documents", docs.size()}, {"k", k}};
  r.artifacts.push_back({a.task_id + "/predictions.json", predictions.dump(2) + "\n"});
  if (a.params.count("gold")) {
    auto gold = classify::parse_label_sets(json::parse(read_file(param(a, "gold"))));
    auto report = classify::evaluate(predicted, gold);
    r.summary["precision"] = report.precision;
    r.summary["recall"] = report.recall;
    r.summary["f1"] = report.f1;
    r.artifacts.push_back({a.task_id + "/evaluation.json", report.to_json().dump(2) + "\n"});
    r.artifacts.push_back({a.task_id + "/evaluation.csv", "precision,recall,f1\n" + report.to_csv_line()});
  }
  return r;
}

tasks::UnitResult Service::run_stats(const tasks::Assignment& a) {
  auto docs = load_layers(a.corpus_id, param(a, "layer"));
  std::optional<std::vector<std::string>> columns;
  if (a.params.count("columns")) columns = list_param(param(a, "columns"));
  auto s = stats::compute_stats(docs, columns);
  tasks::UnitResult r;
  r.summary = {{"documents", s.documents}, {"sentences", s.sentences}, {"tokens", s.tokens}, {"types", s.types()}};
  r.artifacts.push_back({a.task_id + "/stats.csv", stats::stats_to_csv(s)});
  return r;
}

tasks::UnitResult Service::run_export(const tasks::Assignment& a) {
  auto result = store_->export_archive(a.corpus_id, list_param(param(a, "layers")));
  tasks::UnitResult r;
  r.summary = result.to_json();
  r.artifacts.push_back({a.task_id + "/export.zip", std::move(result.archive)});
  return r;
}

tasks::UnitResult Service::run_compare(const tasks::Assignment& a) {
  std::vector<pipeline::PipelineOutput> outputs;
  for (const auto& layer : list_param(param(a, "layers"))) {
    pipeline::PipelineOutput out;
    out.pipeline_id = layer;
    for (auto& doc : load_layers(a.corpus_id, layer)) out.documents.emplace(doc.doc_id, std::move(doc));
    outputs.push_back(std::move(out));
  }
  std::optional<std::map<std::string, conllu::Document>> gold;
  if (a.params.count("gold_layer")) {
    gold.emplace();
    for (auto& doc : load_layers(a.corpus_id, param(a, "gold_layer"))) gold->emplace(doc.doc_id, std::move(doc));
  }
  auto report = pipeline::compare_pipelines(outputs, gold, list_param(param(a, "columns")));
  tasks::UnitResult r;
  r.summary = {{"tokens", report.tokens}, {"pipelines", report.pipelines}};
  r.artifacts.push_back({a.task_id + "/comparison.json", report.to_json().dump(2) + "\n"});
  return r;
}

}  // namespace corpusflow
