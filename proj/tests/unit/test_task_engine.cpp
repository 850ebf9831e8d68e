#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "corpusflow/error.hpp"
#include "corpusflow/runtime.hpp"
#include "corpusflow/task_engine.hpp"

using namespace corpusflow;
using namespace corpusflow::tasks;
using namespace std::chrono_literals;

namespace {

struct Harness {
  std::map<std::string, std::vector<std::string>> corpora{{"c", {"d1", "d2", "d3"}}, {"empty", {}}};
  std::vector<std::string> persisted;
  bool fail_persist = false;
  TimePoint clock = TimePoint{} + std::chrono::hours(1000);
  TaskEngine engine;

  explicit Harness(EngineOptions options = {})
      : engine(
            [this](const std::string& id) -> std::optional<std::vector<std::string>> {
              auto it = corpora.find(id);
              if (it == corpora.end()) return std::nullopt;
              return it->second;
            },
            [this](const Assignment& a, const UnitResult&) -> nlohmann::json {
              if (fail_persist) throw Error("disk full");
              persisted.push_back(a.unit_id);
              return nullptr;
            },
            with_clock(std::move(options))) {}

  EngineOptions with_clock(EngineOptions o) {
    o.now = [this] { return clock; };
    return o;
  }
};

UnitResult summary(const std::string& s) {
  UnitResult r;
  r.summary = s;
  return r;
}

}  // namespace

TEST_CASE("parameter validation per kind") {
  CHECK_NOTHROW(validate_params(TaskKind::stats, {{"layer", "annotation"}}));
  CHECK_THROWS_AS(validate_params(TaskKind::stats, {}), InvalidArgument);
  CHECK_THROWS_AS(validate_params(TaskKind::stats, {{"layer", "a"}, {"bogus", "1"}}), InvalidArgument);
  CHECK_THROWS_AS(validate_params(TaskKind::stats, {{"layer", "../x"}}), InvalidArgument);
  CHECK_THROWS_AS(validate_params(TaskKind::classify, {{"layer", "a"}, {"model", "m"}, {"k", "0"}}),
                  InvalidArgument);
  CHECK_NOTHROW(validate_params(TaskKind::classify, {{"layer", "a"}, {"model", "m"}, {"k", "6"}}));
  CHECK_THROWS_AS(validate_params(TaskKind::annotate, {{"operations", "flying"}}), InvalidArgument);
  CHECK_NOTHROW(validate_params(TaskKind::annotate, {{"operations", "pos-tagging,ner"}}));
  CHECK(parse_kind("geonames_link") == TaskKind::geonames_link);
  CHECK_FALSE(parse_kind("nope"));
  for (auto k : all_kinds()) CHECK(parse_kind(to_string(k)) == k);
}

TEST_CASE("document-parallel tasks split into one unit per document") {
  Harness h;
  h.engine.register_worker("mock://a", {"stats", "convert_spans"}, 2, true);
  auto tid = h.engine.submit_task(TaskKind::convert_spans, "c", {{"layer", "l"}});
  CHECK(tid == "task-000001");
  CHECK(h.engine.task(tid).status.total_units == 3);
  auto single = h.engine.submit_task(TaskKind::stats, "c", {{"layer", "l"}});
  CHECK(h.engine.task(single).status.total_units == 1);
  CHECK_THROWS_AS(h.engine.submit_task(TaskKind::stats, "missing", {{"layer", "l"}}), NotFound);
  auto empty = h.engine.submit_task(TaskKind::convert_spans, "empty", {{"layer", "l"}});
  CHECK(h.engine.task(empty).status.state == TaskState::done);

  auto first = h.engine.dispatch();
  CHECK(first.size() == 2);  // capacity
  CHECK(h.engine.task(tid).status.state == TaskState::running);
  CHECK(first[0].doc_id == "d1");
  CHECK(first[1].attempt == 1);
  CHECK(h.engine.report_result(first[0].node_id, first[0].unit_id, Outcome::ok(summary("x"))) == Ack::accepted);
  CHECK(h.engine.report_result(first[0].node_id, first[0].unit_id, Outcome::ok(summary("x"))) == Ack::duplicate);
  CHECK(h.persisted.size() == 1);
  CHECK(h.engine.task(tid).summary["d1"] == "x");
}

TEST_CASE("failures retry on other nodes until attempts run out") {
  EngineOptions o;
  o.max_attempts = 2;
  Harness h(o);
  auto a = h.engine.register_worker("mock://a", {"stats"}, 1, true);
  auto b = h.engine.register_worker("mock://b", {"stats"}, 1, true);
  auto tid = h.engine.submit_task(TaskKind::stats, "c", {{"layer", "l"}});
  auto first = h.engine.dispatch();
  REQUIRE(first.size() == 1);
  CHECK(first[0].node_id == a);
  h.engine.report_result(a, first[0].unit_id, Outcome::failure("boom"));
  auto second = h.engine.dispatch();
  REQUIRE(second.size() == 1);
  CHECK(second[0].node_id == b);  // a already failed this unit
  CHECK(second[0].attempt == 2);
  CHECK_THROWS_AS(h.engine.report_result(a, second[0].unit_id, Outcome::ok({})), Conflict);
  h.engine.report_result(b, second[0].unit_id, Outcome::failure("boom again"));
  auto t = h.engine.task(tid);
  CHECK(t.status.state == TaskState::failed);
  CHECK(t.status.failed_units == 1);
  CHECK(t.status.last_error == "boom again");
  CHECK(h.engine.report_result(b, second[0].unit_id, Outcome::ok({})) == Ack::ignored);
}

TEST_CASE("persist failures count as failed attempts") {
  Harness h;
  auto a = h.engine.register_worker("mock://a", {"stats"}, 1, true);
  auto tid = h.engine.submit_task(TaskKind::stats, "c", {{"layer", "l"}});
  h.fail_persist = true;
  auto as = h.engine.dispatch();
  h.engine.report_result(a, as[0].unit_id, Outcome::ok({}));
  CHECK(h.engine.unit_counts(tid).queued == 1);
  h.fail_persist = false;
  as = h.engine.dispatch();
  REQUIRE(as.size() == 1);
  CHECK(as[0].attempt == 2);
  h.engine.report_result(a, as[0].unit_id, Outcome::ok({}));
  CHECK(h.engine.task(tid).status.state == TaskState::done);
}

TEST_CASE("timeouts requeue in-flight units") {
  EngineOptions o;
  o.unit_timeout = 5s;
  Harness h(o);
  auto a = h.engine.register_worker("mock://a", {"stats"}, 1, true);
  auto tid = h.engine.submit_task(TaskKind::stats, "c", {{"layer", "l"}});
  auto as = h.engine.dispatch();
  h.clock += 4s;
  CHECK(h.engine.expire_timeouts() == 0);
  h.clock += 2s;
  CHECK(h.engine.expire_timeouts() == 1);
  CHECK(h.engine.worker(a).inflight == 0);
  CHECK_THROWS_AS(h.engine.report_result(a, as[0].unit_id, Outcome::ok({})), Conflict);
  auto again = h.engine.dispatch();
  REQUIRE(again.size() == 1);
  CHECK(h.engine.report_result(a, again[0].unit_id, Outcome::ok({})) == Ack::accepted);
  CHECK(h.engine.is_finished(tid));
}

TEST_CASE("health: suspect, dead, recovered") {
  Harness h;
  auto a = h.engine.register_worker("mock://a", {"convert_spans"}, 3, true);
  auto b = h.engine.register_worker("mock://b", {"convert_spans"}, 3, true);
  auto tid = h.engine.submit_task(TaskKind::convert_spans, "c", {{"layer", "l"}});
  h.engine.report_health(b, false);
  CHECK(h.engine.worker(b).state == NodeState::suspect);
  auto as = h.engine.dispatch();
  CHECK(as.size() == 3);
  for (const auto& x : as) CHECK(x.node_id == a);
  h.engine.report_health(a, false);
  h.engine.report_health(a, false);
  h.engine.report_health(a, false);
  CHECK(h.engine.worker(a).state == NodeState::dead);
  CHECK(h.engine.unit_counts(tid).queued == 3);
  h.engine.report_health(b, true);
  auto moved = h.engine.dispatch();
  CHECK(moved.size() == 3);
  for (const auto& x : moved) {
    CHECK(x.node_id == b);
    h.engine.report_result(b, x.unit_id, Outcome::ok({}));
  }
  CHECK(h.engine.task(tid).status.state == TaskState::done);
  CHECK(h.persisted.size() == 3);
  h.engine.report_health(a, true);
  CHECK(h.engine.worker(a).state == NodeState::healthy);
}

TEST_CASE("deregistering requeues without consuming an attempt") {
  EngineOptions o;
  o.max_attempts = 1;
  Harness h(o);
  auto a = h.engine.register_worker("mock://a", {"stats"}, 1, true);
  auto tid = h.engine.submit_task(TaskKind::stats, "c", {{"layer", "l"}});
  h.engine.dispatch();
  h.engine.deregister_worker(a);
  CHECK(h.engine.unit_counts(tid).queued == 1);
  auto b = h.engine.register_worker("mock://b", {"stats"}, 1, true);
  auto as = h.engine.dispatch();
  REQUIRE(as.size() == 1);
  CHECK(as[0].attempt == 1);
  h.engine.report_result(b, as[0].unit_id, Outcome::ok({}));
  CHECK(h.engine.task(tid).status.state == TaskState::done);
}

TEST_CASE("registration rules") {
  Harness h;
  CHECK_THROWS_AS(h.engine.register_worker("mock://a", {"teleport"}, 1), InvalidArgument);
  CHECK_THROWS_AS(h.engine.register_worker("mock://a", {}, 1), InvalidArgument);
  CHECK_THROWS_AS(h.engine.register_worker("mock://a", {"ner"}, 0), InvalidArgument);
  h.engine.register_worker("mock://a", {"ner"}, 1);
  CHECK_THROWS_AS(h.engine.register_worker("mock://a", {"ner"}, 1), Conflict);
  CHECK(h.engine.register_worker("inproc://x", {"anything"}, 1, true, "local") == "local");
}

TEST_CASE("annotate needs the whole resolved operation set") {
  Harness h;
  h.engine.register_worker("mock://partial", {"pos-tagging"}, 5);
  auto tid = h.engine.submit_task(TaskKind::annotate, "c", {{"operations", "pos-tagging"}});
  CHECK(h.engine.required_operations(TaskKind::annotate, {{"operations", "pos-tagging"}}) ==
        std::set<std::string>{"sentence-splitting", "tokenization", "pos-tagging"});
  CHECK(h.engine.dispatch().empty());
  CHECK(h.engine.task(tid).status.state == TaskState::queued);
  CHECK_FALSE(h.engine.task(tid).started);
  h.engine.register_worker("mock://full", {"sentence-splitting", "tokenization", "pos-tagging"}, 5);
  CHECK(h.engine.dispatch().size() == 3);
  CHECK(h.engine.unit_counts(tid).inflight == 3);
}

TEST_CASE("cancel drops queued units and ignores late results") {
  Harness h;
  auto a = h.engine.register_worker("mock://a", {"convert_spans"}, 1, true);
  auto tid = h.engine.submit_task(TaskKind::convert_spans, "c", {{"layer", "l"}});
  auto as = h.engine.dispatch();
  h.engine.cancel_task(tid);
  CHECK(h.engine.task(tid).status.state == TaskState::cancelled);
  CHECK(h.engine.report_result(a, as[0].unit_id, Outcome::ok({})) == Ack::ignored);
  CHECK(h.engine.worker(a).inflight == 0);
  CHECK(h.persisted.empty());
  CHECK(h.engine.idle());
}

TEST_CASE("snapshot restores queued and in-flight work") {
  Harness h;
  auto a = h.engine.register_worker("http://127.0.0.1:9", {"sentence-splitting"}, 1);
  h.engine.register_worker("inproc://local", {"stats"}, 1, true, "local");
  auto tid = h.engine.submit_task(TaskKind::annotate, "c", {{"operations", "sentence-splitting"}});
  auto as = h.engine.dispatch();
  h.engine.report_result(a, as[0].unit_id, Outcome::ok(summary("s1")));
  h.engine.dispatch();
  auto snap = h.engine.snapshot();

  Harness r;
  r.engine.restore(snap);
  auto t = r.engine.task(tid);
  CHECK(t.status.completed_units == 1);
  CHECK(t.summary["d1"] == "s1");
  auto counts = r.engine.unit_counts(tid);
  CHECK(counts.queued == 2);
  CHECK(counts.done == 1);
  REQUIRE(r.engine.workers().size() == 1);
  auto again = r.engine.dispatch();
  REQUIRE(again.size() == 1);
  CHECK(again[0].attempt == 1);
  // ids keep counting after a restore
  CHECK(r.engine.submit_task(TaskKind::convert_spans, "c", {{"layer", "l"}}) == "task-000002");
}

TEST_CASE("runtime drives units to completion on threads") {
  TaskEngine engine([](const std::string&) { return std::optional<std::vector<std::string>>({"a", "b", "c", "d"}); },
                    [](const Assignment&, const UnitResult&) { return nlohmann::json(); });
  engine.register_worker("inproc://local", {"convert_spans"}, 2, true, "local");
  std::atomic<int> runs{0};
  Runtime runtime(
      engine,
      [&](const Assignment& a) {
        ++runs;
        if (a.doc_id == "b" && a.attempt == 1) throw Error("flaky");
        return UnitResult{};
      },
      [](const WorkerNode&) { return true; }, RuntimeOptions{5ms, 50ms});
  runtime.start();
  auto tid = engine.submit_task(TaskKind::convert_spans, "c", {{"layer", "l"}});
  runtime.wake();
  CHECK(runtime.wait(tid, 10s));
  CHECK(engine.task(tid).status.state == TaskState::done);
  CHECK(runs == 5);
  runtime.stop();
}
