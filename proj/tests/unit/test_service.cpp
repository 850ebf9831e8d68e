#include <doctest.h>

#include <httplib.h>

#include "corpusflow/config.hpp"
#include "corpusflow/error.hpp"
#include "corpusflow/http_api.hpp"
#include "corpusflow/service.hpp"
#include "corpusflow/worker_client.hpp"
#include "corpusflow/zip.hpp"
#include "support.hpp"

using namespace corpusflow;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

ServiceOptions options_for(const testing::TempDir& dir, bool persist = false) {
  ServiceOptions o;
  o.config.storage_root = dir.str();
  o.config.local_workers = 2;
  o.persist_queue = persist;
  o.tick = 5ms;
  return o;
}

}  // namespace

TEST_CASE("config parsing") {
  auto c = Config::parse("# comment\nport = 9000\n  storage_root = /tmp/x  \nbearer_token=abc\n\n");
  CHECK(c.port == 9000);
  CHECK(c.storage_root == "/tmp/x");
  CHECK(c.bearer_token == "abc");
  CHECK(c.max_attempts == 3);
  CHECK_THROWS_AS(Config::parse("colour = blue\n"), ParseError);
  CHECK_THROWS_AS(Config::parse("max_attempts = 0\n"), ParseError);
  CHECK_THROWS_AS(Config::parse("port = 70000\n"), ParseError);
  CHECK_THROWS_AS(Config::parse("just words\n"), ParseError);
  CHECK_THROWS_AS(Config::load("/nonexistent/corpusflow.conf"), NotFound);
  try {
    Config::parse("\n\nport = x\n");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).rfind("line 3: ", 0) == 0);
  }
}

TEST_CASE("endpoint parsing") {
  auto ep = workers::parse_endpoint("http://10.0.0.5:9090/tagger/");
  CHECK(ep.host == "10.0.0.5");
  CHECK(ep.port == 9090);
  CHECK(ep.base_path == "/tagger");
  CHECK(ep.origin() == "http://10.0.0.5:9090");
  CHECK(workers::parse_endpoint("http://worker").port == 80);
  CHECK(workers::parse_endpoint("mock://a").scheme == "mock");
  CHECK_THROWS_AS(workers::parse_endpoint("ftp://x"), InvalidArgument);
  CHECK_THROWS_AS(workers::parse_endpoint("http://x:0"), InvalidArgument);
  CHECK_THROWS_AS(workers::parse_endpoint("worker:80"), InvalidArgument);
  CHECK_THROWS_AS(workers::parse_endpoint("mock://"), InvalidArgument);
}

TEST_CASE("service runs ingest, annotate, convert, link, stats, export") {
  testing::TempDir dir;
  Service svc(options_for(dir));
  svc.start();
  auto ingest = svc.wait(svc.upload_archive("news", testing::fixture("e2e_corpus.zip")), 30s);
  REQUIRE(ingest.status.state == tasks::TaskState::done);
  CHECK(ingest.summary["documents"] == 3);
  CHECK(std::filesystem::is_empty(dir.path() / "uploads"));

  svc.register_worker("mock://tests", {"sentence-splitting", "tokenization", "pos-tagging", "lemmatization"});
  auto ann = svc.wait(svc.submit("annotate", "news", {{"operations", "lemmatization"}}), 30s);
  REQUIRE(ann.status.state == tasks::TaskState::done);
  CHECK(ann.status.completed_units == 3);
  auto conv = svc.wait(svc.submit("convert_spans", "news", {{"layer", "annotation"}}), 30s);
  REQUIRE(conv.status.state == tasks::TaskState::done);
  auto link = svc.wait(svc.submit("geonames_link", "news",
                                  {{"layer", "annotation"}, {"index", testing::fixture_path("geonames_extract.tsv")}}),
                       30s);
  REQUIRE(link.status.state == tasks::TaskState::done);
  CHECK(link.summary["stire1"]["linked"] == 2);
  auto st = svc.wait(svc.submit("stats", "news", {{"layer", "annotation"}}), 30s);
  REQUIRE(st.status.state == tasks::TaskState::done);
  CHECK(st.artifacts == std::vector<std::string>{st.task_id + "/stats.csv"});
  auto csv = svc.store().get_artifact("news", st.artifacts[0]);
  CHECK(csv.rfind("metric,value\ndocuments,3\n", 0) == 0);

  auto doc = svc.store().load_layer("news", "stire1", "annotation");
  CHECK(doc.schema.columns().back() == "RELATE:GEONAMES");

  auto exp = svc.wait(svc.submit("export_archive", "news", {{"layers", "annotation"}}), 30s);
  REQUIRE(exp.status.state == tasks::TaskState::done);
  CHECK(zip::read_archive(svc.store().get_artifact("news", exp.artifacts[0])).size() == 10);
  svc.shutdown();
}

TEST_CASE("failing units surface the error") {
  testing::TempDir dir;
  Service svc(options_for(dir));
  svc.start();
  svc.wait(svc.upload_archive("c", zip::write_archive({{"a.txt", "Ana are mere."}})), 30s);
  auto t = svc.wait(svc.submit("geonames_link", "c", {{"layer", "missing"}, {"index", "/nonexistent.tsv"}}), 30s);
  CHECK(t.status.state == tasks::TaskState::failed);
  REQUIRE(t.status.last_error);
  CHECK_THROWS_AS(svc.submit("teleport", "c", {}), InvalidArgument);
  CHECK_THROWS_AS(svc.submit("stats", "nope", {{"layer", "x"}}), NotFound);
  CHECK_THROWS_AS(svc.deregister_worker("local"), InvalidArgument);
  CHECK_THROWS_AS(svc.register_worker("gopher://x", {"ner"}), InvalidArgument);
  auto bad = svc.wait(svc.upload_archive("d", "not a zip"), 30s);
  CHECK(bad.status.state == tasks::TaskState::failed);
}

TEST_CASE("queue survives a restart") {
  testing::TempDir dir;
  std::string task_id;
  {
    Service svc(options_for(dir, true));
    svc.start();
    svc.wait(svc.upload_archive("c", zip::write_archive({{"a.txt", "Ana are mere."}, {"b.txt", "Ion vine."}})), 30s);
    // no worker can annotate yet, so the task stays queued
    task_id = svc.submit("annotate", "c", {{"operations", "tokenization"}});
    svc.register_worker("http://127.0.0.1:1", {"sentence-splitting", "ner"});
    svc.shutdown();
  }
  CHECK(std::filesystem::exists(dir.path() / "queue.json"));
  Service svc(options_for(dir, true));
  // nothing could be assigned before the restart
  CHECK(svc.engine().task(task_id).status.state == tasks::TaskState::queued);
  CHECK(svc.engine().workers().size() == 2);
  svc.start();
  svc.register_worker("mock://late", {"sentence-splitting", "tokenization"});
  auto t = svc.wait(task_id, 30s);
  CHECK(t.status.state == tasks::TaskState::done);
  CHECK(svc.store().has_layer("c", "b", "annotation"));
}

TEST_CASE("HTTP API") {
  testing::TempDir dir;
  Service svc(options_for(dir));
  svc.start();
  http::ApiServer api(svc);
  int port = api.bind("127.0.0.1", 0);
  api.start_background();
  httplib::Client client("127.0.0.1", port);

  httplib::MultipartFormDataItems items = {{"archive", testing::fixture("e2e_corpus.zip"), "c.zip", "application/zip"},
                                           {"corpus_id", "news", "", ""}};
  auto up = client.Post("/corpora?wait=true", items);
  REQUIRE(up);
  CHECK(up->status == 201);
  auto body = json::parse(up->body);
  CHECK(body["api_version"] == "1.0");
  CHECK(body["task"]["status"]["state"] == "done");

  auto corpus = client.Get("/corpora/news");
  REQUIRE(corpus);
  CHECK(json::parse(corpus->body)["documents"] == 3);
  CHECK(client.Get("/corpora/nothing")->status == 404);

  auto w = client.Post("/workers", R"({"endpoint": "mock://http", "operations": ["sentence-splitting", "tokenization"]})",
                       "application/json");
  CHECK(w->status == 201);
  auto node = json::parse(w->body)["node_id"].get<std::string>();
  CHECK(client.Post("/workers", R"({"endpoint": "mock://http", "operations": ["ner"]})", "application/json")->status ==
        409);

  auto task = client.Post("/tasks", R"({"kind": "annotate", "corpus_id": "news", "params": {"operations": ["tokenization"]}})",
                          "application/json");
  REQUIRE(task);
  CHECK(task->status == 201);
  auto tid = json::parse(task->body)["task_id"].get<std::string>();
  svc.wait(tid, 30s);
  auto status = json::parse(client.Get("/tasks/" + tid)->body);
  CHECK(status["status"]["state"] == "done");
  CHECK(status["status"]["completed_units"] == 3);

  auto st = client.Post("/tasks", R"({"kind": "stats", "corpus_id": "news", "params": {"layer": "annotation"}})",
                        "application/json");
  auto sid = json::parse(st->body)["task_id"].get<std::string>();
  svc.wait(sid, 30s);
  auto art = client.Get("/corpora/news/artifacts/" + sid + "/stats.csv");
  REQUIRE(art);
  CHECK(art->status == 200);
  CHECK(art->body.rfind("metric,value\n", 0) == 0);

  auto exp = client.Get("/corpora/news/export?layers=annotation");
  REQUIRE(exp);
  CHECK(exp->get_header_value("Content-Type") == "application/zip");
  CHECK(json::parse(exp->get_header_value("X-Export-Report"))["documents"] == 3);

  CHECK(client.Post("/tasks", "{nope", "application/json")->status == 400);
  CHECK(client.Post("/tasks", R"({"kind": "stats", "corpus_id": "news", "params": {"bogus": 1}})", "application/json")
            ->status == 422);
  CHECK(client.Get("/tasks/task-999999")->status == 404);
  CHECK(client.Get("/no/such/thing")->status == 404);

  auto comps = json::parse(client.Get("/components")->body)["components"];
  CHECK(comps.size() == 4);
  CHECK(comps[3]["public"] == false);
  CHECK(client.Delete("/workers/" + node)->status == 200);
  CHECK(client.Delete("/workers/local")->status == 422);
  api.stop();
  svc.shutdown();
}

TEST_CASE("remote HTTP worker end to end") {
  http::MockWorkerServer worker;
  int port = worker.bind("127.0.0.1", 0);
  worker.start_background();
  std::string endpoint = "http://127.0.0.1:" + std::to_string(port);
  workers::HttpWorker client(endpoint, 5s);
  CHECK(client.healthy());
  auto r = client.process({{"text", "Ana are mere."}, {"operations", {"sentence-splitting", "tokenization"}}});
  CHECK(r["sentences"][0]["tokens"].size() == 4);
  CHECK_THROWS_AS(client.process({{"text", "x"}, {"operations", {"flying"}}}), Error);
  CHECK_FALSE(workers::HttpWorker("http://127.0.0.1:1", 1s).healthy(200ms));

  testing::TempDir dir;
  Service svc(options_for(dir));
  svc.start();
  svc.wait(svc.upload_archive("c", zip::write_archive({{"a.txt", "Ion vine. Ana pleacă."}})), 30s);
  svc.register_worker(endpoint, {"sentence-splitting", "tokenization", "pos-tagging"});
  auto t = svc.wait(svc.submit("annotate", "c", {{"operations", "pos-tagging"}, {"layer", "remote"}}), 30s);
  CHECK(t.status.state == tasks::TaskState::done);
  CHECK(svc.store().load_layer("c", "a", "remote").sentences.size() == 2);
  svc.shutdown();
}
