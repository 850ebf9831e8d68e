#pragma once

// The internal API every front end (HTTP, CLI, Python) goes through: corpus
// storage, the task engine and its runtime, and one executor per task kind.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "corpusflow/classifier.hpp"
#include "corpusflow/config.hpp"
#include "corpusflow/corpus_store.hpp"
#include "corpusflow/geonames.hpp"
#include "corpusflow/pipeline.hpp"
#include "corpusflow/runtime.hpp"
#include "corpusflow/span_annotation.hpp"
#include "corpusflow/task_engine.hpp"

namespace corpusflow {

inline constexpr std::string_view kApiVersion = "1.0";
inline constexpr std::string_view kVersion = "0.3.0";
inline constexpr std::string_view kLocalNode = "local";
inline constexpr std::string_view kDefaultLayer = "annotation";

struct ComponentDescriptor {
  std::string name;
  std::string version;
  std::vector<std::string> endpoints;
  bool is_public = true;

  nlohmann::json to_json() const;
};

struct ServiceOptions {
  Config config;
  // Restore the task queue from <storage_root>/queue.json on start and save
  // it on shutdown.
  bool persist_queue = false;
  // Gazetteers for in-process mock:// workers.
  spans::Gazetteer mock_ner;
  spans::Gazetteer mock_biomedical;
  std::chrono::milliseconds tick{20};
};

class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void start();
  // Stops the runtime and, when enabled, saves the queue.
  void shutdown();

  store::CorpusStore& store() { return *store_; }
  tasks::TaskEngine& engine() { return *engine_; }
  const Config& config() const { return options_.config; }

  std::string submit(std::string_view kind, const std::string& corpus_id,
                     std::map<std::string, std::string> params);
  // Stores the upload and queues an extract_archive task for it.
  std::string upload_archive(const std::string& corpus_id, std::string_view archive);
  // Throws Error if the task does not finish in time.
  tasks::Task wait(const std::string& task_id,
                   std::chrono::milliseconds timeout = std::chrono::hours(24));

  // Endpoints: http://host:port[/base], or mock://<name> for an in-process
  // mock worker.
  std::string register_worker(const std::string& endpoint, std::set<std::string> operations,
                              std::optional<std::size_t> max_inflight = std::nullopt);
  void deregister_worker(const std::string& node_id);

  std::vector<ComponentDescriptor> components() const;

  void save_queue() const;
  std::filesystem::path queue_path() const;

 private:
  tasks::UnitResult execute(const tasks::Assignment& a);
  nlohmann::json persist(const tasks::Assignment& a, const tasks::UnitResult& r);
  bool probe(const tasks::WorkerNode& node);
  pipeline::WorkerPtr worker_for(const std::string& endpoint);

  tasks::UnitResult run_annotate(const tasks::Assignment& a);
  tasks::UnitResult run_convert_spans(const tasks::Assignment& a);
  tasks::UnitResult run_geonames(const tasks::Assignment& a);
  tasks::UnitResult run_anonymize(const tasks::Assignment& a);
  tasks::UnitResult run_rdf(const tasks::Assignment& a);
  tasks::UnitResult run_gazetteer(const tasks::Assignment& a);
  tasks::UnitResult run_classify(const tasks::Assignment& a);
  tasks::UnitResult run_stats(const tasks::Assignment& a);
  tasks::UnitResult run_export(const tasks::Assignment& a);
  tasks::UnitResult run_compare(const tasks::Assignment& a);
  tasks::UnitResult run_extract(const tasks::Assignment& a);

  // Documents of the corpus that hold `layer`; throws if none does.
  std::vector<conllu::Document> load_layers(const std::string& corpus_id, const std::string& layer) const;

  std::shared_ptr<const geonames::GeonamesIndex> index(const std::string& path);
  std::shared_ptr<const classify::LinearModel> model(const std::string& path);
  // Entity surfaces of the whole corpus, computed once per anonymize task.
  std::shared_ptr<const spans::SurfaceList> corpus_surfaces(const tasks::Assignment& a,
                                                            const std::string& layer,
                                                            const std::string& column,
                                                            const std::set<std::string>& labels);

  ServiceOptions options_;
  std::filesystem::path root_;
  std::unique_ptr<store::CorpusStore> store_;
  std::unique_ptr<tasks::TaskEngine> engine_;
  std::unique_ptr<tasks::Runtime> runtime_;

  std::mutex cache_mutex_;
  std::map<std::string, std::pair<std::filesystem::file_time_type, std::shared_ptr<const geonames::GeonamesIndex>>> indexes_;
  std::map<std::string, std::pair<std::filesystem::file_time_type, std::shared_ptr<const classify::LinearModel>>> models_;
  std::map<std::string, pipeline::WorkerPtr> mock_workers_;
  std::mutex surfaces_mutex_;
  std::map<std::string, std::shared_ptr<const spans::SurfaceList>> surfaces_;
  std::mutex upload_mutex_;
  std::size_t upload_counter_ = 0;
  bool started_ = false;
};

}  // namespace corpusflow
