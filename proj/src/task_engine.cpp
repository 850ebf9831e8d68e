#include "corpusflow/task_engine.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <tuple>

#include "corpusflow/corpus_store.hpp"
#include "corpusflow/error.hpp"
#include "corpusflow/pipeline.hpp"
#include "corpusflow/text.hpp"

using nlohmann::json;

namespace corpusflow::tasks {

namespace {

struct KindInfo {
  TaskKind kind;
  std::string_view name;
  bool document_parallel;
  std::vector<std::string_view> required;
  std::vector<std::string_view> optional;
};

const std::vector<KindInfo>& kind_table() {
  static const std::vector<KindInfo> table = {
      {TaskKind::extract_archive, "extract_archive", false, {"archive"}, {}},
      {TaskKind::annotate, "annotate", true, {"operations"}, {"layer", "pipeline_id"}},
      {TaskKind::convert_spans, "convert_spans", true, {"layer"}, {"output_layer", "column"}},
      {TaskKind::gazetteer, "gazetteer", false, {"layer"}, {"column"}},
      {TaskKind::classify, "classify", false, {"layer", "model"}, {"k", "gold"}},
      {TaskKind::geonames_link, "geonames_link", true, {"layer", "index"}, {"output_layer", "ner_column"}},
      {TaskKind::anonymize, "anonymize", true, {"layer", "labels"}, {"output_layer", "column"}},
      {TaskKind::stats, "stats", false, {"layer"}, {"columns"}},
      {TaskKind::rdf_export, "rdf_export", true, {"layer", "base_uri"}, {"columns"}},
      {TaskKind::export_archive, "export_archive", false, {}, {"layers"}},
      {TaskKind::compare_pipelines, "compare_pipelines", false, {"layers", "columns"}, {"gold_layer"}},
  };
  return table;
}

const KindInfo& info(TaskKind kind) {
  for (const auto& k : kind_table())
    if (k.kind == kind) return k;
  throw Error("unknown task kind");
}

std::vector<std::string> list_param(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& part : text::split(value, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string iso_time(TimePoint t) {
  auto secs = std::chrono::time_point_cast<std::chrono::seconds>(t);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t - secs).count();
  std::time_t tt = Clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::int64_t to_ms(TimePoint t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

TimePoint from_ms(std::int64_t ms) { return TimePoint(std::chrono::milliseconds(ms)); }

std::string_view unit_state_name(UnitState s) {
  switch (s) {
    case UnitState::queued: return "queued";
    case UnitState::inflight: return "inflight";
    case UnitState::persisting: return "persisting";
    case UnitState::done: return "done";
    case UnitState::failed: return "failed";
  }
  return "queued";
}

UnitState parse_unit_state(std::string_view s) {
  for (auto st : {UnitState::queued, UnitState::inflight, UnitState::persisting, UnitState::done, UnitState::failed})
    if (unit_state_name(st) == s) return st;
  throw InvalidArgument("bad unit state in snapshot: " + std::string(s));
}

TaskState parse_task_state(std::string_view s) {
  for (auto st : {TaskState::queued, TaskState::running, TaskState::done, TaskState::failed, TaskState::cancelled})
    if (to_string(st) == s) return st;
  throw InvalidArgument("bad task state in snapshot: " + std::string(s));
}

bool finished_state(TaskState s) {
  return s == TaskState::done || s == TaskState::failed || s == TaskState::cancelled;
}

}  // namespace

std::string_view to_string(TaskKind kind) { return info(kind).name; }

std::optional<TaskKind> parse_kind(std::string_view name) {
  for (const auto& k : kind_table())
    if (k.name == name) return k.kind;
  return std::nullopt;
}

const std::vector<TaskKind>& all_kinds() {
  static const std::vector<TaskKind> kinds = [] {
    std::vector<TaskKind> v;
    for (const auto& k : kind_table()) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

bool is_document_parallel(TaskKind kind) { return info(kind).document_parallel; }

void validate_params(TaskKind kind, const std::map<std::string, std::string>& params) {
  const auto& k = info(kind);
  for (const auto& [name, value] : params) {
    bool known = std::find(k.required.begin(), k.required.end(), name) != k.required.end() ||
                 std::find(k.optional.begin(), k.optional.end(), name) != k.optional.end();
    if (!known) throw InvalidArgument("unknown parameter '" + name + "' for " + std::string(k.name));
  }
  for (auto name : k.required) {
    auto it = params.find(std::string(name));
    if (it == params.end() || text::trim(it->second).empty())
      throw InvalidArgument("missing parameter '" + std::string(name) + "' for " + std::string(k.name));
  }
  for (auto name : {"layer", "output_layer", "gold_layer"}) {
    auto it = params.find(name);
    if (it != params.end() && !store::is_valid_identifier(it->second))
      throw InvalidArgument("invalid layer name in '" + std::string(name) + "': " + it->second);
  }
  if (auto it = params.find("layers"); it != params.end()) {
    auto layers = list_param(it->second);
    if (layers.empty() && kind == TaskKind::compare_pipelines)
      throw InvalidArgument("parameter 'layers' lists no layer");
    for (const auto& l : layers)
      if (!store::is_valid_identifier(l)) throw InvalidArgument("invalid layer name in 'layers': " + l);
  }
  if (auto it = params.find("k"); it != params.end()) {
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(it->second, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != it->second.size() || v < 1) throw InvalidArgument("parameter 'k' must be a positive integer");
  }
  if (kind == TaskKind::annotate) {
    auto ops = list_param(params.at("operations"));
    if (ops.empty()) throw InvalidArgument("parameter 'operations' lists no operation");
    pipeline::resolve_operations(std::set<std::string>(ops.begin(), ops.end()));
  }
  if (kind == TaskKind::anonymize && list_param(params.at("labels")).empty())
    throw InvalidArgument("parameter 'labels' lists no label");
  if (kind == TaskKind::compare_pipelines && list_param(params.at("columns")).empty())
    throw InvalidArgument("parameter 'columns' lists no column");
}

std::string_view to_string(TaskState state) {
  switch (state) {
    case TaskState::queued: return "queued";
    case TaskState::running: return "running";
    case TaskState::done: return "done";
    case TaskState::failed: return "failed";
    case TaskState::cancelled: return "cancelled";
  }
  return "queued";
}

std::string_view to_string(NodeState state) {
  switch (state) {
    case NodeState::healthy: return "healthy";
    case NodeState::suspect: return "suspect";
    case NodeState::dead: return "dead";
  }
  return "healthy";
}

json Task::to_json() const {
  json j = {{"task_id", task_id},
            {"kind", to_string(kind)},
            {"corpus_id", corpus_id},
            {"params", params},
            {"status",
             {{"state", to_string(status.state)},
              {"total_units", status.total_units},
              {"completed_units", status.completed_units},
              {"failed_units", status.failed_units},
              {"last_error", status.last_error ? json(*status.last_error) : json(nullptr)}}},
            {"created", iso_time(created)},
            {"started", started ? json(iso_time(*started)) : json(nullptr)},
            {"finished", finished ? json(iso_time(*finished)) : json(nullptr)},
            {"artifacts", artifacts},
            {"summary", summary}};
  return j;
}

json WorkerNode::to_json() const {
  return {{"node_id", node_id},         {"endpoint", endpoint},
          {"operations", operations},   {"state", to_string(state)},
          {"inflight", inflight},       {"max_inflight", max_inflight},
          {"local", local}};
}

TaskEngine::TaskEngine(DocumentLister lister, Persister persister, EngineOptions options)
    : lister_(std::move(lister)), persister_(std::move(persister)), options_(std::move(options)) {
  if (options_.max_attempts == 0) throw InvalidArgument("max_attempts must be at least 1");
  if (options_.dead_after_failures == 0) throw InvalidArgument("dead_after_failures must be at least 1");
}

std::string TaskEngine::unit_id(const std::string& task_id, std::size_t index) {
  return task_id + "/" + std::to_string(index);
}

std::pair<std::string, std::size_t> TaskEngine::parse_unit_id(const std::string& id) const {
  auto slash = id.rfind('/');
  if (slash == std::string::npos) throw NotFound("unknown unit: " + id);
  std::string task_id = id.substr(0, slash);
  std::string index = id.substr(slash + 1);
  if (index.empty() || !std::all_of(index.begin(), index.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
      index.size() > 9)
    throw NotFound("unknown unit: " + id);
  auto it = tasks_.find(task_id);
  std::size_t i = std::stoul(index);
  if (it == tasks_.end() || i >= it->second.units.size()) throw NotFound("unknown unit: " + id);
  return {task_id, i};
}

TaskEngine::TaskEntry& TaskEngine::entry(const std::string& task_id) {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw NotFound("unknown task: " + task_id);
  return it->second;
}

const TaskEngine::TaskEntry& TaskEngine::entry(const std::string& task_id) const {
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw NotFound("unknown task: " + task_id);
  return it->second;
}

WorkerNode& TaskEngine::node(const std::string& node_id) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw NotFound("unknown worker: " + node_id);
  return it->second;
}

std::set<std::string> TaskEngine::required_operations(
    TaskKind kind, const std::map<std::string, std::string>& params) const {
  if (kind != TaskKind::annotate) return {std::string(to_string(kind))};
  auto ops = list_param(params.at("operations"));
  auto resolved = pipeline::resolve_operations(std::set<std::string>(ops.begin(), ops.end()));
  return {resolved.begin(), resolved.end()};
}

std::string TaskEngine::submit_task(TaskKind kind, const std::string& corpus_id,
                                    std::map<std::string, std::string> params) {
  validate_params(kind, params);
  if (!store::is_valid_identifier(corpus_id)) throw InvalidArgument("invalid corpus id: '" + corpus_id + "'");
  std::vector<std::string> docs;
  if (kind != TaskKind::extract_archive) {
    auto listed = lister_(corpus_id);
    if (!listed) throw NotFound("unknown corpus: " + corpus_id);
    docs = std::move(*listed);
  }
  TaskEntry t;
  t.required = required_operations(kind, params);
  t.task.kind = kind;
  t.task.corpus_id = corpus_id;
  t.task.params = std::move(params);

  std::lock_guard lock(mutex_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "task-%06zu", next_task_++);
  t.task.task_id = buf;
  t.task.created = options_.now();
  if (is_document_parallel(kind)) {
    for (auto& d : docs) {
      Unit u;
      u.doc_id = std::move(d);
      t.units.push_back(std::move(u));
    }
  } else {
    t.units.push_back(Unit{});
  }
  for (std::size_t i = 0; i < t.units.size(); ++i) t.queue.push_back(i);
  t.task.status.total_units = t.units.size();
  if (t.units.empty()) {
    t.task.status.state = TaskState::done;
    t.task.started = t.task.finished = t.task.created;
  }
  std::string id = t.task.task_id;
  order_.push_back(id);
  tasks_.emplace(id, std::move(t));
  return id;
}

void TaskEngine::cancel_task(const std::string& task_id) {
  std::lock_guard lock(mutex_);
  auto& t = entry(task_id);
  if (finished_state(t.task.status.state)) return;
  t.task.status.state = TaskState::cancelled;
  t.task.finished = options_.now();
  for (auto i : t.queue) t.units[i].state = UnitState::failed;
  t.queue.clear();
}

std::string TaskEngine::register_worker(const std::string& endpoint, std::set<std::string> operations,
                                        std::size_t max_inflight, bool local, std::string node_id) {
  if (max_inflight == 0) throw InvalidArgument("max_inflight must be at least 1");
  if (operations.empty()) throw InvalidArgument("a worker must declare at least one operation");
  if (!local) {
    const auto& registry = pipeline::Registry::standard();
    for (const auto& op : operations)
      if (!registry.find(op)) throw InvalidArgument("unknown operation: " + op);
  }
  std::lock_guard lock(mutex_);
  if (node_id.empty()) {
    do {
      char buf[32];
      std::snprintf(buf, sizeof buf, "node-%03zu", next_node_++);
      node_id = buf;
    } while (nodes_.count(node_id));
  } else if (nodes_.count(node_id)) {
    throw Conflict("worker already registered: " + node_id);
  }
  for (const auto& [id, n] : nodes_)
    if (n.endpoint == endpoint) throw Conflict("endpoint already registered as " + id);
  WorkerNode n;
  n.node_id = node_id;
  n.endpoint = endpoint;
  n.operations = std::move(operations);
  n.max_inflight = max_inflight;
  n.local = local;
  nodes_.emplace(node_id, std::move(n));
  return node_id;
}

void TaskEngine::deregister_worker(const std::string& node_id) {
  std::lock_guard lock(mutex_);
  node(node_id);
  for (auto& [tid, t] : tasks_)
    for (std::size_t i = 0; i < t.units.size(); ++i)
      if (t.units[i].state == UnitState::inflight && t.units[i].node_id == node_id)
        fail_attempt(t, i, "worker " + node_id + " deregistered", false);
  nodes_.erase(node_id);
}

void TaskEngine::release_node(const std::string& node_id) {
  auto it = nodes_.find(node_id);
  if (it != nodes_.end() && it->second.inflight > 0) --it->second.inflight;
}

void TaskEngine::fail_attempt(TaskEntry& t, std::size_t index, const std::string& reason, bool penalize) {
  Unit& u = t.units[index];
  if (penalize) {
    u.failed_on.insert(u.node_id);
  } else if (u.attempts > 0) {
    --u.attempts;
  }
  u.node_id.clear();
  if (t.task.status.state == TaskState::cancelled) {
    u.state = UnitState::failed;
    return;
  }
  if (u.attempts >= options_.max_attempts) {
    u.state = UnitState::failed;
    ++t.task.status.failed_units;
    t.task.status.last_error = (u.doc_id.empty() ? "" : u.doc_id + ": ") + reason;
    finish_if_complete(t);
  } else {
    u.state = UnitState::queued;
    t.queue.push_back(index);
  }
}

void TaskEngine::finish_if_complete(TaskEntry& t) {
  auto& s = t.task.status;
  if (finished_state(s.state)) return;
  if (s.completed_units + s.failed_units < s.total_units) return;
  s.state = s.failed_units > 0 ? TaskState::failed : TaskState::done;
  t.task.finished = options_.now();
}

std::vector<Assignment> TaskEngine::dispatch() {
  std::lock_guard lock(mutex_);
  auto now = options_.now();
  std::vector<Assignment> out;
  for (const auto& tid : order_) {
    auto& t = tasks_.at(tid);
    auto& state = t.task.status.state;
    if (finished_state(state)) continue;
    while (!t.queue.empty()) {
      std::size_t index = t.queue.front();
      Unit& u = t.units[index];
      WorkerNode* best = nullptr;
      std::tuple<bool, std::size_t, std::string> best_key;
      for (auto& [id, n] : nodes_) {
        if (n.state != NodeState::healthy || n.inflight >= n.max_inflight) continue;
        if (!std::includes(n.operations.begin(), n.operations.end(), t.required.begin(), t.required.end()))
          continue;
        std::tuple<bool, std::size_t, std::string> key{u.failed_on.count(id) > 0, n.inflight, id};
        if (!best || key < best_key) {
          best = &n;
          best_key = key;
        }
      }
      if (!best) break;
      if (state == TaskState::queued) {
        state = TaskState::running;
        t.task.started = now;
      }
      t.queue.pop_front();
      ++best->inflight;
      u.state = UnitState::inflight;
      u.node_id = best->node_id;
      ++u.attempts;
      u.deadline = now + options_.unit_timeout;
      out.push_back(Assignment{unit_id(tid, index), tid, t.task.kind, t.task.corpus_id, u.doc_id,
                               t.task.params, best->node_id, best->endpoint, u.attempts, u.deadline});
    }
  }
  return out;
}

Ack TaskEngine::report_result(const std::string& node_id, const std::string& id, Outcome outcome) {
  Assignment a;
  std::string task_id;
  std::size_t index = 0;
  {
    std::lock_guard lock(mutex_);
    std::tie(task_id, index) = parse_unit_id(id);
    auto& t = tasks_.at(task_id);
    Unit& u = t.units[index];
    if (u.state == UnitState::done || u.state == UnitState::persisting) return Ack::duplicate;
    bool holder = u.state == UnitState::inflight && u.node_id == node_id;
    if (t.task.status.state == TaskState::cancelled) {
      if (holder) {
        release_node(node_id);
        u.state = UnitState::failed;
        u.node_id.clear();
      }
      return Ack::ignored;
    }
    if (u.state == UnitState::failed) return Ack::ignored;
    if (!holder) throw Conflict("worker " + node_id + " does not hold unit " + id);
    release_node(node_id);
    if (!outcome.success) {
      fail_attempt(t, index, outcome.error, true);
      return Ack::accepted;
    }
    u.state = UnitState::persisting;
    a = Assignment{id, task_id, t.task.kind, t.task.corpus_id, u.doc_id, t.task.params,
                   node_id, "", u.attempts, u.deadline};
  }

  std::string error;
  json summary = outcome.result.summary;
  try {
    if (auto persisted = persister_(a, outcome.result); !persisted.is_null()) summary = std::move(persisted);
  } catch (const std::exception& e) {
    error = std::string("persisting result failed: ") + e.what();
  }

  std::lock_guard lock(mutex_);
  auto& t = tasks_.at(task_id);
  Unit& u = t.units[index];
  if (!error.empty()) {
    u.node_id = node_id;
    fail_attempt(t, index, error, true);
    return Ack::accepted;
  }
  u.state = UnitState::done;
  ++t.task.status.completed_units;
  for (const auto& art : outcome.result.artifacts) t.task.artifacts.push_back(art.name);
  if (!summary.is_null()) {
    if (u.doc_id.empty()) t.task.summary = std::move(summary);
    else t.task.summary[u.doc_id] = std::move(summary);
  }
  finish_if_complete(t);
  return Ack::accepted;
}

void TaskEngine::report_health(const std::string& node_id, bool ok) {
  std::lock_guard lock(mutex_);
  auto& n = node(node_id);
  if (ok) {
    n.health_failures = 0;
    n.state = NodeState::healthy;
    return;
  }
  ++n.health_failures;
  if (n.health_failures < options_.dead_after_failures) {
    if (n.state == NodeState::healthy) n.state = NodeState::suspect;
    return;
  }
  if (n.state == NodeState::dead) return;
  n.state = NodeState::dead;
  for (auto& [tid, t] : tasks_)
    for (std::size_t i = 0; i < t.units.size(); ++i)
      if (t.units[i].state == UnitState::inflight && t.units[i].node_id == node_id) {
        release_node(node_id);
        fail_attempt(t, i, "worker " + node_id + " stopped answering health probes", true);
      }
}

std::size_t TaskEngine::expire_timeouts() {
  std::lock_guard lock(mutex_);
  auto now = options_.now();
  std::size_t expired = 0;
  for (auto& [tid, t] : tasks_)
    for (std::size_t i = 0; i < t.units.size(); ++i) {
      Unit& u = t.units[i];
      if (u.state != UnitState::inflight || u.deadline > now) continue;
      release_node(u.node_id);
      std::string reason = "unit timed out on worker " + u.node_id;
      fail_attempt(t, i, reason, true);
      ++expired;
    }
  return expired;
}

Task TaskEngine::task(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  return entry(task_id).task;
}

std::vector<Task> TaskEngine::tasks() const {
  std::lock_guard lock(mutex_);
  std::vector<Task> out;
  for (const auto& id : order_) out.push_back(tasks_.at(id).task);
  return out;
}

WorkerNode TaskEngine::worker(const std::string& node_id) const {
  std::lock_guard lock(mutex_);
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw NotFound("unknown worker: " + node_id);
  return it->second;
}

std::vector<WorkerNode> TaskEngine::workers() const {
  std::lock_guard lock(mutex_);
  std::vector<WorkerNode> out;
  for (const auto& [id, n] : nodes_) out.push_back(n);
  return out;
}

UnitCounts TaskEngine::unit_counts(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  UnitCounts c;
  for (const auto& u : entry(task_id).units) {
    switch (u.state) {
      case UnitState::queued: ++c.queued; break;
      case UnitState::inflight:
      case UnitState::persisting: ++c.inflight; break;
      case UnitState::done: ++c.done; break;
      case UnitState::failed: ++c.failed; break;
    }
  }
  return c;
}

bool TaskEngine::is_finished(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  return finished_state(entry(task_id).task.status.state);
}

bool TaskEngine::idle() const {
  std::lock_guard lock(mutex_);
  for (const auto& [id, t] : tasks_)
    if (!finished_state(t.task.status.state)) return false;
  return true;
}

json TaskEngine::snapshot() const {
  std::lock_guard lock(mutex_);
  json tasks = json::array();
  for (const auto& id : order_) {
    const auto& t = tasks_.at(id);
    json units = json::array();
    for (const auto& u : t.units)
      units.push_back({{"doc_id", u.doc_id},
                       {"state", unit_state_name(u.state)},
                       {"attempts", u.attempts},
                       {"failed_on", u.failed_on}});
    const auto& s = t.task.status;
    tasks.push_back({{"task_id", t.task.task_id},
                     {"kind", to_string(t.task.kind)},
                     {"corpus_id", t.task.corpus_id},
                     {"params", t.task.params},
                     {"state", to_string(s.state)},
                     {"completed_units", s.completed_units},
                     {"failed_units", s.failed_units},
                     {"last_error", s.last_error ? json(*s.last_error) : json(nullptr)},
                     {"created", to_ms(t.task.created)},
                     {"started", t.task.started ? json(to_ms(*t.task.started)) : json(nullptr)},
                     {"finished", t.task.finished ? json(to_ms(*t.task.finished)) : json(nullptr)},
                     {"artifacts", t.task.artifacts},
                     {"summary", t.task.summary},
                     {"units", units}});
  }
  json workers = json::array();
  for (const auto& [id, n] : nodes_)
    if (!n.local)
      workers.push_back({{"node_id", id},
                         {"endpoint", n.endpoint},
                         {"operations", n.operations},
                         {"max_inflight", n.max_inflight}});
  return {{"version", 1}, {"next_task", next_task_}, {"next_node", next_node_},
          {"tasks", tasks}, {"workers", workers}};
}

void TaskEngine::restore(const json& snap) {
  if (snap.value("version", 0) != 1) throw InvalidArgument("unsupported queue snapshot version");
  std::map<std::string, TaskEntry> tasks;
  std::vector<std::string> order;
  for (const auto& j : snap.at("tasks")) {
    TaskEntry t;
    auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw InvalidArgument("unknown task kind in snapshot");
    t.task.task_id = j.at("task_id").get<std::string>();
    t.task.kind = *kind;
    t.task.corpus_id = j.at("corpus_id").get<std::string>();
    t.task.params = j.at("params").get<std::map<std::string, std::string>>();
    t.task.status.state = parse_task_state(j.at("state").get<std::string>());
    t.task.status.completed_units = j.at("completed_units").get<std::size_t>();
    t.task.status.failed_units = j.at("failed_units").get<std::size_t>();
    if (!j.at("last_error").is_null()) t.task.status.last_error = j.at("last_error").get<std::string>();
    t.task.created = from_ms(j.at("created").get<std::int64_t>());
    if (!j.at("started").is_null()) t.task.started = from_ms(j.at("started").get<std::int64_t>());
    if (!j.at("finished").is_null()) t.task.finished = from_ms(j.at("finished").get<std::int64_t>());
    t.task.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    t.task.summary = j.at("summary");
    t.required = required_operations(t.task.kind, t.task.params);
    for (const auto& uj : j.at("units")) {
      Unit u;
      u.doc_id = uj.at("doc_id").get<std::string>();
      u.state = parse_unit_state(uj.at("state").get<std::string>());
      u.attempts = uj.at("attempts").get<std::size_t>();
      u.failed_on = uj.at("failed_on").get<std::set<std::string>>();
      if (u.state == UnitState::inflight || u.state == UnitState::persisting) {
        // The attempt was interrupted by the shutdown, not by the worker.
        u.state = UnitState::queued;
        if (u.attempts > 0) --u.attempts;
      }
      t.units.push_back(std::move(u));
    }
    t.task.status.total_units = t.units.size();
    if (!finished_state(t.task.status.state))
      for (std::size_t i = 0; i < t.units.size(); ++i)
        if (t.units[i].state == UnitState::queued) t.queue.push_back(i);
    order.push_back(t.task.task_id);
    tasks.emplace(t.task.task_id, std::move(t));
  }

  std::lock_guard lock(mutex_);
  tasks_ = std::move(tasks);
  order_ = std::move(order);
  next_task_ = std::max(next_task_, snap.at("next_task").get<std::size_t>());
  next_node_ = std::max(next_node_, snap.at("next_node").get<std::size_t>());
  for (const auto& w : snap.at("workers")) {
    auto id = w.at("node_id").get<std::string>();
    if (nodes_.count(id)) continue;
    WorkerNode n;
    n.node_id = id;
    n.endpoint = w.at("endpoint").get<std::string>();
    n.operations = w.at("operations").get<std::set<std::string>>();
    n.max_inflight = w.at("max_inflight").get<std::size_t>();
    nodes_.emplace(id, std::move(n));
  }
}

}  // namespace corpusflow::tasks
