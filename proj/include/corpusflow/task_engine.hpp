#pragma once

// Task queue and scheduler. The engine is a synchronous state machine: it
// splits tasks into units, hands units to worker nodes on dispatch(), and
// folds results, timeouts and health reports back into task state. It never
// blocks and never does I/O itself; the Runtime (runtime.hpp) drives it.

#include <chrono>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "corpusflow/conllu.hpp"

namespace corpusflow::tasks {

enum class TaskKind {
  extract_archive,
  annotate,
  convert_spans,
  gazetteer,
  classify,
  geonames_link,
  anonymize,
  stats,
  rdf_export,
  export_archive,
  compare_pipelines,
};

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> parse_kind(std::string_view name);
const std::vector<TaskKind>& all_kinds();
// One unit per document; every other kind runs as a single unit.
bool is_document_parallel(TaskKind kind);

// Throws InvalidArgument naming the offending parameter.
void validate_params(TaskKind kind, const std::map<std::string, std::string>& params);

enum class TaskState { queued, running, done, failed, cancelled };
enum class NodeState { healthy, suspect, dead };

std::string_view to_string(TaskState state);
std::string_view to_string(NodeState state);

using Clock = std::chrono::system_clock;
using TimePoint = Clock::time_point;

struct TaskStatus {
  TaskState state = TaskState::queued;
  std::size_t total_units = 0;
  std::size_t completed_units = 0;
  std::size_t failed_units = 0;
  std::optional<std::string> last_error;
};

struct Task {
  std::string task_id;
  TaskKind kind = TaskKind::stats;
  std::string corpus_id;
  std::map<std::string, std::string> params;
  TaskStatus status;
  TimePoint created{};
  std::optional<TimePoint> started;
  std::optional<TimePoint> finished;
  std::vector<std::string> artifacts;
  // doc_id -> unit summary, or the single unit's summary
  nlohmann::json summary = nlohmann::json::object();

  nlohmann::json to_json() const;
};

struct WorkerNode {
  std::string node_id;
  std::string endpoint;
  std::set<std::string> operations;
  NodeState state = NodeState::healthy;
  std::size_t inflight = 0;
  std::size_t max_inflight = 1;
  std::size_t health_failures = 0;  // consecutive
  bool local = false;

  nlohmann::json to_json() const;
};

enum class UnitState { queued, inflight, persisting, done, failed };

struct UnitCounts {
  std::size_t queued = 0;
  std::size_t inflight = 0;  // includes units being persisted
  std::size_t done = 0;
  std::size_t failed = 0;
};

struct Assignment {
  std::string unit_id;
  std::string task_id;
  TaskKind kind = TaskKind::stats;
  std::string corpus_id;
  std::string doc_id;  // empty for single-unit kinds
  std::map<std::string, std::string> params;
  std::string node_id;
  std::string endpoint;
  std::size_t attempt = 0;  // 1-based
  TimePoint deadline{};
};

struct LayerWrite {
  std::string doc_id;
  std::string layer;
  conllu::Document document;
};

struct ArtifactWrite {
  std::string name;
  std::string content;
};

struct UnitResult {
  std::vector<LayerWrite> layers;
  std::vector<ArtifactWrite> artifacts;
  std::optional<std::string> archive;  // ingested into the task's corpus
  nlohmann::json summary;
};

struct Outcome {
  bool success = false;
  UnitResult result;
  std::string error;

  static Outcome ok(UnitResult r) { return {true, std::move(r), {}}; }
  static Outcome failure(std::string message) { return {false, {}, std::move(message)}; }
};

enum class Ack { accepted, duplicate, ignored };

struct EngineOptions {
  std::size_t max_attempts = 3;
  std::chrono::milliseconds unit_timeout{120000};
  std::size_t dead_after_failures = 3;
  std::function<TimePoint()> now = [] { return Clock::now(); };
};

class TaskEngine {
 public:
  // Documents of a corpus, sorted; nullopt when the corpus does not exist.
  using DocumentLister = std::function<std::optional<std::vector<std::string>>(const std::string&)>;
  // Makes a successful unit durable. Called at most once per unit, outside
  // the engine lock. Throwing turns the outcome into a failure. A non-null
  // return value replaces the unit summary.
  using Persister = std::function<nlohmann::json(const Assignment&, const UnitResult&)>;

  TaskEngine(DocumentLister lister, Persister persister, EngineOptions options = {});

  // Throws NotFound for an unknown corpus (except extract_archive, which
  // creates it) and InvalidArgument for bad params.
  std::string submit_task(TaskKind kind, const std::string& corpus_id,
                          std::map<std::string, std::string> params);
  void cancel_task(const std::string& task_id);

  // Operations a node must support to take units of this task.
  std::set<std::string> required_operations(TaskKind kind,
                                            const std::map<std::string, std::string>& params) const;

  std::string register_worker(const std::string& endpoint, std::set<std::string> operations,
                              std::size_t max_inflight, bool local = false,
                              std::string node_id = {});
  // In-flight units go back to the queue without consuming an attempt.
  void deregister_worker(const std::string& node_id);

  // Assigns queued units: tasks in submission order, units round robin
  // within a task, each to the least loaded eligible node (ties by node id),
  // preferring nodes the unit has not already failed on.
  std::vector<Assignment> dispatch();

  // Idempotent: a repeated report for a finished unit is a duplicate and is
  // not persisted again. Throws NotFound for an unknown unit and Conflict
  // when the node does not hold the unit.
  Ack report_result(const std::string& node_id, const std::string& unit_id, Outcome outcome);

  // One missed probe makes a node suspect (not dispatched to); the
  // configured number of consecutive misses makes it dead and requeues its
  // units. A successful probe restores a suspect node.
  void report_health(const std::string& node_id, bool ok);

  // Requeues (or fails) in-flight units past their deadline; returns how many.
  std::size_t expire_timeouts();

  Task task(const std::string& task_id) const;
  std::vector<Task> tasks() const;
  WorkerNode worker(const std::string& node_id) const;
  std::vector<WorkerNode> workers() const;
  UnitCounts unit_counts(const std::string& task_id) const;
  bool is_finished(const std::string& task_id) const;
  // True when no task is queued or running.
  bool idle() const;

  // Tasks, units and remote workers; in-flight units come back queued.
  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& snapshot);

  const EngineOptions& options() const { return options_; }

 private:
  struct Unit {
    std::string doc_id;
    UnitState state = UnitState::queued;
    std::size_t attempts = 0;
    std::string node_id;
    TimePoint deadline{};
    std::set<std::string> failed_on;
  };
  struct TaskEntry {
    Task task;
    std::set<std::string> required;
    std::vector<Unit> units;
    std::deque<std::size_t> queue;
  };

  TaskEntry& entry(const std::string& task_id);
  const TaskEntry& entry(const std::string& task_id) const;
  WorkerNode& node(const std::string& node_id);
  void fail_attempt(TaskEntry& t, std::size_t index, const std::string& reason, bool penalize);
  void finish_if_complete(TaskEntry& t);
  void release_node(const std::string& node_id);
  static std::string unit_id(const std::string& task_id, std::size_t index);
  std::pair<std::string, std::size_t> parse_unit_id(const std::string& unit_id) const;

  DocumentLister lister_;
  Persister persister_;
  EngineOptions options_;

  mutable std::mutex mutex_;
  std::map<std::string, TaskEntry> tasks_;
  std::vector<std::string> order_;  // submission order
  std::map<std::string, WorkerNode> nodes_;
  std::size_t next_task_ = 1;
  std::size_t next_node_ = 1;
};

}  // namespace corpusflow::tasks
