#pragma once

// On-disk corpus storage. Each corpus lives in <root>/<corpus_id>/ with a
// manifest.json and content-addressed blobs (SHA-256). Every mutation writes
// its blobs first and then swaps the manifest in with an atomic rename, so a
// crash leaves either the old or the new state. Readers and writers of one
// corpus are serialized through a per-corpus shared mutex.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "corpusflow/conllu.hpp"
#include "corpusflow/span_annotation.hpp"

namespace corpusflow::store {

inline constexpr int kFormatVersion = 1;

struct LayerRef {
  std::string blob;       // serialized CoNLL-U Plus
  std::string text_blob;  // raw text differing from the document's, or empty
};

struct DocumentRecord {
  std::string doc_id;
  std::string text_blob;
  std::map<std::string, std::string> metadata;
  std::optional<std::vector<spans::StandoffSpan>> spans;
  std::map<std::string, LayerRef> layers;
};

struct IngestionReport {
  std::size_t documents = 0;
  std::size_t metadata_files = 0;
  std::size_t span_files = 0;
  std::size_t skipped = 0;
  std::vector<std::string> skipped_entries;
  std::vector<std::string> doc_ids;

  nlohmann::json to_json() const;
};

struct ExportResult {
  std::string archive;
  std::size_t documents = 0;
  // doc_id -> requested layers the document does not have
  std::map<std::string, std::vector<std::string>> missing_layers;

  nlohmann::json to_json() const;  // everything but the archive bytes
};

struct CorpusSummary {
  std::string corpus_id;
  std::size_t documents = 0;
  std::map<std::string, std::size_t> layers;  // layer -> documents holding it
  std::size_t with_spans = 0;
  std::vector<std::string> artifacts;

  nlohmann::json to_json() const;
};

// Corpus ids and layer names: [A-Za-z0-9._-]+, not "." or "..".
bool is_valid_identifier(std::string_view id);

// "a/b/c.txt" -> "a__b__c"; the suffix must already be removed.
std::string flatten_doc_id(std::string_view path);

std::string sha256_hex(std::string_view bytes);

class CorpusStore {
 public:
  // Opens (or creates) the storage root and loads every manifest in it.
  explicit CorpusStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Creates the corpus if absent. Archive members "<name>.txt" become
  // documents, "<name>.meta.json" their metadata (flat string map) and
  // "<name>.ann" their standoff spans; directory components are flattened
  // into the id with "__". Other members are skipped and counted. A doc_id
  // that collides inside the archive or with the corpus is a Conflict and
  // nothing is stored.
  IngestionReport ingest_archive(const std::string& corpus_id, std::string_view archive);

  // One "<doc>.txt" per document plus "<doc>.meta.json", "<doc>.ann" and
  // "<doc>.<layer>.conllup" for whatever the document holds.
  ExportResult export_archive(const std::string& corpus_id,
                              const std::vector<std::string>& layers) const;

  bool has_corpus(const std::string& corpus_id) const;
  std::vector<std::string> list_corpora() const;
  CorpusSummary summary(const std::string& corpus_id) const;

  std::vector<std::string> list_documents(const std::string& corpus_id) const;  // sorted
  DocumentRecord document(const std::string& corpus_id, const std::string& doc_id) const;
  std::string raw_text(const std::string& corpus_id, const std::string& doc_id) const;
  bool has_layer(const std::string& corpus_id, const std::string& doc_id,
                 const std::string& layer) const;

  // The stored layer with doc_id, metadata and raw text filled in.
  conllu::Document load_layer(const std::string& corpus_id, const std::string& doc_id,
                              const std::string& layer) const;
  // Replaces the layer. A raw text that differs from the document's (for
  // example after anonymization) is kept with the layer.
  void attach_annotation(const std::string& corpus_id, const std::string& doc_id,
                         const std::string& layer, const conllu::Document& doc);

  void put_artifact(const std::string& corpus_id, const std::string& name, std::string_view content);
  std::string get_artifact(const std::string& corpus_id, const std::string& name) const;
  std::vector<std::string> list_artifacts(const std::string& corpus_id) const;

 private:
  struct Corpus {
    mutable std::shared_mutex mutex;
    std::filesystem::path dir;
    std::string corpus_id;
    std::map<std::string, DocumentRecord> documents;
    std::map<std::string, std::string> artifacts;  // name -> blob
  };

  std::shared_ptr<Corpus> find(const std::string& corpus_id) const;  // throws NotFound
  std::shared_ptr<Corpus> find_or_create(const std::string& corpus_id);
  std::shared_ptr<Corpus> load_corpus(const std::filesystem::path& dir) const;
  static void save_manifest(const Corpus& corpus);
  static std::string write_blob(const Corpus& corpus, std::string_view content,
                                std::string_view suffix);
  static std::string read_blob(const Corpus& corpus, const std::string& key);

  std::filesystem::path root_;
  mutable std::mutex corpora_mutex_;
  std::map<std::string, std::shared_ptr<Corpus>> corpora_;
};

}  // namespace corpusflow::store
