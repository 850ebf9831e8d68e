// corpusflow command line. Every subcommand runs against the same Service
// the HTTP API uses, on the storage root from the config (or --storage).
// Exit codes: 0 success, 1 failure, 2 usage error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <pthread.h>

#include "corpusflow/error.hpp"
#include "corpusflow/geonames.hpp"
#include "corpusflow/http_api.hpp"
#include "corpusflow/service.hpp"
#include "corpusflow/text.hpp"

using namespace corpusflow;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::string storage;
  std::string corpus;
  std::string output;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write " + path);
}

Config load_config(const Globals& g) {
  Config c = g.config_path.empty() ? Config{} : Config::load(g.config_path);
  if (!g.storage.empty()) c.storage_root = g.storage;
  return c;
}

spans::Gazetteer load_gazetteer(const std::string& path) {
  return path.empty() ? spans::Gazetteer{} : spans::parse_gazetteer(read_file(path));
}

// Runs one task to completion and prints its status; returns the exit code.
int run_task(Service& svc, const std::string& kind, const std::string& corpus,
             std::map<std::string, std::string> params, const std::string& artifact_suffix,
             const std::string& output) {
  auto id = svc.submit(kind, corpus, std::move(params));
  auto task = svc.wait(id);
  std::cerr << task.to_json().dump(2) << "\n";
  if (task.status.state != tasks::TaskState::done) return 1;
  if (!artifact_suffix.empty()) {
    for (const auto& name : task.artifacts)
      if (text::starts_with(name, id + "/") && name.size() >= artifact_suffix.size() &&
          name.compare(name.size() - artifact_suffix.size(), artifact_suffix.size(), artifact_suffix) == 0)
        write_output(output, svc.store().get_artifact(corpus, name));
  }
  return 0;
}

int serve(const Config& config) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  // Blocked before any thread starts so that only the waiter below sees them.
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceOptions options;
  options.config = config;
  options.persist_queue = true;
  Service svc(options);
  http::ApiServer api(svc);
  int port = api.bind(config.listen_address, config.port);
  svc.start();
  std::cerr << "listening on " << config.listen_address << ":" << port << "\n";

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    api.stop();
  });
  api.listen();
  waiter.join();
  svc.shutdown();
  std::cerr << "queue saved to " << svc.queue_path().string() << "\n";
  return 0;
}

int serve_mock(const std::string& host, int port, const std::string& ner, const std::string& bio) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  http::MockWorkerServer server(mock::MockWorker(load_gazetteer(ner), load_gazetteer(bio)));
  int bound = server.bind(host, port);
  std::cerr << "mock worker listening on " << host << ":" << bound << "\n";
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpusflow: corpus annotation and processing"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Configuration file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--storage", g.storage, "Storage root, overrides the config");

  auto corpus_opt = [&](CLI::App* cmd) { cmd->add_option("--corpus", g.corpus, "Corpus id")->required(); };
  std::map<std::string, std::string> params;
  auto opt = [&](CLI::App* cmd, const std::string& flag, const std::string& key, const std::string& help,
                 bool required = false) {
    auto* o = cmd->add_option_function<std::string>(flag, [&params, key](const std::string& v) { params[key] = v; }, help);
    if (required) o->required();
  };

  auto* ingest = app.add_subcommand("ingest", "Import a ZIP archive of documents into a corpus");
  std::string archive;
  ingest->add_option("archive", archive, "ZIP archive")->required()->check(CLI::ExistingFile);
  corpus_opt(ingest);

  auto* attach = app.add_subcommand("attach", "Store a CoNLL-U Plus file as an annotation layer of a document");
  std::string attach_doc, attach_layer, attach_file;
  corpus_opt(attach);
  attach->add_option("--doc", attach_doc, "Document id")->required();
  attach->add_option("--layer", attach_layer, "Layer name")->required();
  attach->add_option("file", attach_file, "CoNLL-U or CoNLL-U Plus file")->required()->check(CLI::ExistingFile);

  auto* annotate = app.add_subcommand("annotate", "Run annotation operations over a corpus");
  corpus_opt(annotate);
  opt(annotate, "--operations", "operations", "Comma-separated operations", true);
  opt(annotate, "--layer", "layer", "Output layer (default: annotation)");
  std::vector<std::string> worker_urls;
  std::string mock_ner, mock_bio;
  annotate->add_option("--worker", worker_urls, "Worker endpoint (repeatable); default: one in-process mock");
  annotate->add_option("--ner-gazetteer", mock_ner, "Gazetteer TSV for in-process mock workers");
  annotate->add_option("--bio-gazetteer", mock_bio, "Biomedical gazetteer TSV for in-process mock workers");

  auto* convert = app.add_subcommand("convert-spans", "Project standoff spans onto tokens as IOB tags");
  corpus_opt(convert);
  opt(convert, "--layer", "layer", "Tokenized layer", true);
  opt(convert, "--output-layer", "output_layer", "Output layer (default: same)");
  opt(convert, "--column", "column", "Tag column (default: RELATE:NE)");

  auto* link = app.add_subcommand("link-geonames", "Link LOC entities to GeoNames codes");
  corpus_opt(link);
  opt(link, "--layer", "layer", "Layer with entity tags", true);
  opt(link, "--index", "index", "GeoNames extract file", true);
  opt(link, "--output-layer", "output_layer", "Output layer (default: same)");
  opt(link, "--ner-column", "ner_column", "Entity column (default: RELATE:NE)");

  auto* geo_extract = app.add_subcommand("geonames-extract", "Convert a GeoNames dump into the extract format");
  std::string dump_path;
  geo_extract->add_option("dump", dump_path, "GeoNames dump (allCountries.txt format)")->required()->check(CLI::ExistingFile);

  auto* classify = app.add_subcommand("classify", "Assign top-k descriptor labels to documents");
  corpus_opt(classify);
  opt(classify, "--layer", "layer", "Tokenized layer", true);
  opt(classify, "--model", "model", "Model file", true);
  opt(classify, "-k,--top-k", "k", "Labels per document (default: 6)");
  opt(classify, "--gold", "gold", "Gold label JSON; adds precision/recall/F1");

  auto* gazetteer = app.add_subcommand("gazetteer", "Extract a gazetteer from IOB tags");
  corpus_opt(gazetteer);
  opt(gazetteer, "--layer", "layer", "Layer with entity tags", true);
  opt(gazetteer, "--column", "column", "Tag column (default: RELATE:NE)");

  auto* anonymize = app.add_subcommand("anonymize", "Replace entity mentions with placeholders");
  corpus_opt(anonymize);
  opt(anonymize, "--layer", "layer", "Layer with entity tags", true);
  opt(anonymize, "--labels", "labels", "Comma-separated entity labels", true);
  opt(anonymize, "--output-layer", "output_layer", "Output layer (default: <layer>-anon)");
  opt(anonymize, "--column", "column", "Tag column (default: RELATE:NE)");

  auto* stats = app.add_subcommand("stats", "Corpus statistics as CSV");
  corpus_opt(stats);
  opt(stats, "--layer", "layer", "Layer to count", true);
  opt(stats, "--columns", "columns", "Histogram columns (default: UPOS and namespaced columns)");

  auto* rdf = app.add_subcommand("rdf-export", "Turtle export of annotation columns");
  corpus_opt(rdf);
  opt(rdf, "--layer", "layer", "Layer to export", true);
  opt(rdf, "--base-uri", "base_uri", "Base URI of document resources", true);
  opt(rdf, "--columns", "columns", "Columns to export (default: all annotation columns)");

  auto* compare = app.add_subcommand("compare", "Agreement between annotation layers");
  corpus_opt(compare);
  opt(compare, "--layers", "layers", "Comma-separated layers, one per pipeline", true);
  opt(compare, "--columns", "columns", "Comma-separated columns", true);
  opt(compare, "--gold-layer", "gold_layer", "Gold layer for accuracy");

  auto* exp = app.add_subcommand("export", "Export a corpus as a ZIP archive");
  corpus_opt(exp);
  opt(exp, "--layers", "layers", "Comma-separated layers to include");

  for (auto* cmd : {stats, compare, gazetteer, exp, classify, geo_extract})
    cmd->add_option("-o,--output", g.output, "Output file (default: stdout)");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  int serve_port = -1;
  serve_cmd->add_option("--port", serve_port, "Port, overrides the config");

  auto* mock_cmd = app.add_subcommand("mock-worker", "Run a mock annotation worker over HTTP");
  int mock_port = 9090;
  std::string mock_host = "127.0.0.1";
  mock_cmd->add_option("--port", mock_port, "Port (0 = any)");
  mock_cmd->add_option("--host", mock_host, "Listen address");
  mock_cmd->add_option("--ner-gazetteer", mock_ner, "Gazetteer TSV for NER");
  mock_cmd->add_option("--bio-gazetteer", mock_bio, "Gazetteer TSV for biomedical NER");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*mock_cmd) return serve_mock(mock_host, mock_port, mock_ner, mock_bio);
    Config config = load_config(g);
    if (*serve_cmd) {
      if (serve_port >= 0) config.port = serve_port;
      return serve(config);
    }
    if (*geo_extract) {
      std::ifstream in(dump_path, std::ios::binary);
      write_output(g.output, geonames::convert_dump(in));
      return 0;
    }

    ServiceOptions options;
    options.config = config;
    options.mock_ner = load_gazetteer(mock_ner);
    options.mock_biomedical = load_gazetteer(mock_bio);
    Service svc(options);
    svc.start();

    if (*ingest) {
      auto id = svc.upload_archive(g.corpus, read_file(archive));
      auto task = svc.wait(id);
      std::cout << task.to_json().dump(2) << "\n";
      return task.status.state == tasks::TaskState::done ? 0 : 1;
    }
    if (*attach) {
      auto doc = conllu::parse_document(read_file(attach_file));
      svc.store().attach_annotation(g.corpus, attach_doc, attach_layer, doc);
      return 0;
    }
    if (*annotate) {
      auto ops = text::split(params.at("operations"), ',');
      std::set<std::string> resolved;
      for (const auto& op : pipeline::resolve_operations({ops.begin(), ops.end()})) resolved.insert(op);
      if (worker_urls.empty()) worker_urls.push_back("mock://cli");
      for (const auto& url : worker_urls) svc.register_worker(url, resolved);
      return run_task(svc, "annotate", g.corpus, params, "", "");
    }
    if (*convert) return run_task(svc, "convert_spans", g.corpus, params, "", "");
    if (*link) return run_task(svc, "geonames_link", g.corpus, params, "", "");
    if (*classify) return run_task(svc, "classify", g.corpus, params, "/predictions.json", g.output);
    if (*gazetteer) return run_task(svc, "gazetteer", g.corpus, params, "/gazetteer.tsv", g.output);
    if (*anonymize) return run_task(svc, "anonymize", g.corpus, params, "", "");
    if (*stats) return run_task(svc, "stats", g.corpus, params, "/stats.csv", g.output);
    if (*rdf) return run_task(svc, "rdf_export", g.corpus, params, "", "");
    if (*compare) return run_task(svc, "compare_pipelines", g.corpus, params, "/comparison.json", g.output);
    if (*exp) {
      if (g.output.empty()) throw InvalidArgument("export writes binary data; pass -o <file.zip>");
      return run_task(svc, "export_archive", g.corpus, params, "/export.zip", g.output);
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
