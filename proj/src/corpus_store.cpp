#include "corpusflow/corpus_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "corpusflow/error.hpp"
#include "corpusflow/text.hpp"
#include "corpusflow/zip.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace corpusflow::store {

namespace {

constexpr std::string_view kManifest = "manifest.json";
constexpr std::string_view kBlobDir = "blobs";
constexpr std::string_view kTmpPrefix = ".tmp-";

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

void write_all(int fd, std::string_view data, const fs::path& path) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("write failed for " + path.string() + ": " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// Write to a sibling temp file, fsync, rename over the target.
void atomic_write(const fs::path& target, std::string_view content) {
  static std::atomic<unsigned long> counter{0};
  fs::path tmp = target.parent_path() /
                 (std::string(kTmpPrefix) + std::to_string(::getpid()) + "-" +
                  std::to_string(counter.fetch_add(1)));
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot create " + tmp.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, content, tmp);
    if (::fsync(fd) != 0) throw Error("fsync failed for " + tmp.string());
  } catch (...) {
    ::close(fd);
    fs::remove(tmp);
    throw;
  }
  ::close(fd);
  fs::rename(tmp, target);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json spans_to_json(const std::vector<spans::StandoffSpan>& spans) {
  json out = json::array();
  for (const auto& s : spans) out.push_back(json::array({s.start, s.end, s.label}));
  return out;
}

std::vector<spans::StandoffSpan> spans_from_json(const json& j) {
  std::vector<spans::StandoffSpan> out;
  for (const auto& s : j) out.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(), s.at(2).get<std::string>()});
  return out;
}

std::map<std::string, std::string> parse_metadata(std::string_view content, const std::string& entry) {
  json j;
  try {
    j = json::parse(content);
  } catch (const json::exception& e) {
    throw InvalidArgument(entry + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw InvalidArgument(entry + ": metadata must be a JSON object");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw InvalidArgument(entry + ": metadata value for '" + k + "' is not a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

void check_identifier(std::string_view id, std::string_view what) {
  if (!is_valid_identifier(id)) throw InvalidArgument("invalid " + std::string(what) + ": '" + std::string(id) + "'");
}

// Archive tool droppings ("__MACOSX/", "._foo") are never documents.
bool is_hidden_member(std::string_view name) {
  for (const auto& part : text::split(name, '/'))
    if (part == "__MACOSX" || text::starts_with(part, "._")) return true;
  return false;
}

}  // namespace

bool is_valid_identifier(std::string_view id) {
  if (id.empty() || id == "." || id == ".." || id.size() > 200) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
           c == '_' || c == '-';
  });
}

std::string flatten_doc_id(std::string_view path) {
  std::string out;
  for (char c : path) {
    if (c == '/') out += "__";
    else out += c;
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

json IngestionReport::to_json() const {
  return {{"documents", documents},       {"metadata_files", metadata_files},
          {"span_files", span_files},     {"skipped", skipped},
          {"skipped_entries", skipped_entries}, {"doc_ids", doc_ids}};
}

json ExportResult::to_json() const {
  return {{"documents", documents}, {"missing_layers", missing_layers}, {"bytes", archive.size()}};
}

json CorpusSummary::to_json() const {
  return {{"corpus_id", corpus_id}, {"documents", documents}, {"layers", layers},
          {"with_spans", with_spans}, {"artifacts", artifacts}};
}

CorpusStore::CorpusStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (!entry.is_directory() || !fs::exists(entry.path() / kManifest)) continue;
    auto corpus = load_corpus(entry.path());
    corpora_[corpus->corpus_id] = corpus;
  }
}

std::shared_ptr<CorpusStore::Corpus> CorpusStore::load_corpus(const fs::path& dir) const {
  // Leftovers of writes interrupted before their rename.
  for (const auto& f : fs::directory_iterator(dir))
    if (text::starts_with(f.path().filename().string(), kTmpPrefix)) fs::remove(f.path());
  if (fs::exists(dir / kBlobDir))
    for (const auto& f : fs::directory_iterator(dir / kBlobDir))
      if (text::starts_with(f.path().filename().string(), kTmpPrefix)) fs::remove(f.path());

  json m;
  try {
    m = json::parse(read_file(dir / kManifest));
  } catch (const json::exception& e) {
    throw Error("corrupt manifest in " + dir.string() + ": " + e.what());
  }
  if (m.value("format_version", 0) != kFormatVersion)
    throw Error("unsupported manifest format in " + dir.string());
  auto corpus = std::make_shared<Corpus>();
  corpus->dir = dir;
  corpus->corpus_id = m.at("corpus_id").get<std::string>();
  for (const auto& [id, d] : m.at("documents").items()) {
    DocumentRecord rec;
    rec.doc_id = id;
    rec.text_blob = d.at("text").get<std::string>();
    rec.metadata = d.at("metadata").get<std::map<std::string, std::string>>();
    if (!d.at("spans").is_null()) rec.spans = spans_from_json(d.at("spans"));
    for (const auto& [layer, l] : d.at("layers").items())
      rec.layers[layer] = LayerRef{l.at("blob").get<std::string>(), l.value("text", std::string())};
    corpus->documents.emplace(id, std::move(rec));
  }
  corpus->artifacts = m.at("artifacts").get<std::map<std::string, std::string>>();
  return corpus;
}

void CorpusStore::save_manifest(const Corpus& corpus) {
  json docs = json::object();
  for (const auto& [id, rec] : corpus.documents) {
    json layers = json::object();
    for (const auto& [name, ref] : rec.layers) {
      json l = {{"blob", ref.blob}};
      if (!ref.text_blob.empty()) l["text"] = ref.text_blob;
      layers[name] = l;
    }
    docs[id] = {{"text", rec.text_blob},
                {"metadata", rec.metadata},
                {"spans", rec.spans ? spans_to_json(*rec.spans) : json(nullptr)},
                {"layers", layers}};
  }
  json m = {{"format_version", kFormatVersion},
            {"corpus_id", corpus.corpus_id},
            {"documents", docs},
            {"artifacts", corpus.artifacts}};
  atomic_write(corpus.dir / kManifest, m.dump(1) + "\n");
}

std::string CorpusStore::write_blob(const Corpus& corpus, std::string_view content,
                                    std::string_view suffix) {
  std::string key = std::string(kBlobDir) + "/" + sha256_hex(content) + std::string(suffix);
  fs::path path = corpus.dir / key;
  if (!fs::exists(path)) atomic_write(path, content);
  return key;
}

std::string CorpusStore::read_blob(const Corpus& corpus, const std::string& key) {
  return read_file(corpus.dir / key);
}

std::shared_ptr<CorpusStore::Corpus> CorpusStore::find(const std::string& corpus_id) const {
  std::lock_guard lock(corpora_mutex_);
  auto it = corpora_.find(corpus_id);
  if (it == corpora_.end()) throw NotFound("unknown corpus: " + corpus_id);
  return it->second;
}

std::shared_ptr<CorpusStore::Corpus> CorpusStore::find_or_create(const std::string& corpus_id) {
  check_identifier(corpus_id, "corpus id");
  std::lock_guard lock(corpora_mutex_);
  auto it = corpora_.find(corpus_id);
  if (it != corpora_.end()) return it->second;
  auto corpus = std::make_shared<Corpus>();
  corpus->corpus_id = corpus_id;
  corpus->dir = root_ / corpus_id;
  fs::create_directories(corpus->dir / kBlobDir);
  save_manifest(*corpus);
  corpora_[corpus_id] = corpus;
  return corpus;
}

IngestionReport CorpusStore::ingest_archive(const std::string& corpus_id, std::string_view archive) {
  check_identifier(corpus_id, "corpus id");
  auto entries = zip::read_archive(archive);

  IngestionReport report;
  struct Pending {
    std::string entry;
    std::string text;
  };
  std::map<std::string, Pending> docs;
  std::vector<std::pair<std::string, std::string>> metas, anns;  // (doc_id, entry)
  std::map<std::string, std::string> meta_content, ann_content;

  auto skip = [&](const std::string& name) {
    ++report.skipped;
    report.skipped_entries.push_back(name);
  };

  for (const auto& e : entries) {
    if (e.is_directory()) continue;
    if (is_hidden_member(e.name)) {
      skip(e.name);
      continue;
    }
    std::string_view name = e.name;
    std::string_view stem;
    enum { kText, kMeta, kAnn, kOther } kind = kOther;
    if (ends_with(name, ".meta.json")) {
      kind = kMeta;
      stem = name.substr(0, name.size() - 10);
    } else if (ends_with(name, ".ann")) {
      kind = kAnn;
      stem = name.substr(0, name.size() - 4);
    } else if (ends_with(name, ".txt")) {
      kind = kText;
      stem = name.substr(0, name.size() - 4);
    }
    if (kind == kOther || stem.empty() || stem.back() == '/') {
      skip(e.name);
      continue;
    }
    std::string id = flatten_doc_id(stem);
    if (kind == kText) {
      if (docs.count(id)) throw Conflict("duplicate doc_id '" + id + "' in archive (" + e.name + ")");
      if (!text::is_valid_utf8(e.data)) throw InvalidArgument(e.name + ": text is not valid UTF-8");
      docs[id] = Pending{e.name, e.data};
    } else {
      auto& target = kind == kMeta ? meta_content : ann_content;
      if (target.count(id)) throw Conflict("duplicate " + std::string(kind == kMeta ? "metadata" : "span") + " file for '" + id + "' (" + e.name + ")");
      target[id] = e.data;
      (kind == kMeta ? metas : anns).emplace_back(id, e.name);
    }
  }

  std::map<std::string, std::map<std::string, std::string>> metadata;
  std::map<std::string, std::vector<spans::StandoffSpan>> doc_spans;
  for (const auto& [id, entry] : metas) {
    if (!docs.count(id)) {
      skip(entry);
      continue;
    }
    metadata[id] = parse_metadata(meta_content[id], entry);
    ++report.metadata_files;
  }
  for (const auto& [id, entry] : anns) {
    if (!docs.count(id)) {
      skip(entry);
      continue;
    }
    std::vector<spans::StandoffSpan> s;
    try {
      s = spans::parse_standoff(ann_content[id]);
      spans::validate_spans(s, text::codepoint_length(docs[id].text));
    } catch (const ParseError& e) {
      throw ParseError(entry + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(entry + ": " + e.what());
    }
    doc_spans[id] = std::move(s);
    ++report.span_files;
  }

  auto corpus = find_or_create(corpus_id);
  std::unique_lock lock(corpus->mutex);
  for (const auto& [id, p] : docs)
    if (corpus->documents.count(id))
      throw Conflict("doc_id '" + id + "' already exists in corpus " + corpus_id);

  auto documents = corpus->documents;
  for (auto& [id, p] : docs) {
    DocumentRecord rec;
    rec.doc_id = id;
    rec.text_blob = write_blob(*corpus, p.text, ".txt");
    if (auto it = metadata.find(id); it != metadata.end()) rec.metadata = it->second;
    if (auto it = doc_spans.find(id); it != doc_spans.end()) rec.spans = it->second;
    documents.emplace(id, std::move(rec));
    report.doc_ids.push_back(id);
  }
  std::swap(corpus->documents, documents);
  try {
    save_manifest(*corpus);
  } catch (...) {
    std::swap(corpus->documents, documents);
    throw;
  }
  report.documents = docs.size();
  return report;
}

ExportResult CorpusStore::export_archive(const std::string& corpus_id,
                                         const std::vector<std::string>& layers) const {
  for (const auto& l : layers) check_identifier(l, "layer name");
  auto corpus = find(corpus_id);
  std::shared_lock lock(corpus->mutex);
  ExportResult result;
  std::vector<zip::Entry> entries;
  for (const auto& [id, rec] : corpus->documents) {
    std::string raw = read_blob(*corpus, rec.text_blob);
    entries.push_back({id + ".txt", raw});
    if (!rec.metadata.empty()) entries.push_back({id + ".meta.json", json(rec.metadata).dump(2) + "\n"});
    if (rec.spans) entries.push_back({id + ".ann", spans::serialize_standoff(*rec.spans)});
    for (const auto& layer : layers) {
      auto it = rec.layers.find(layer);
      if (it == rec.layers.end()) {
        result.missing_layers[id].push_back(layer);
        continue;
      }
      auto doc = conllu::parse_document(read_blob(*corpus, it->second.blob));
      doc.doc_id = id;
      doc.metadata = rec.metadata;
      entries.push_back({id + "." + layer + ".conllup", conllu::serialize_document(doc)});
    }
    ++result.documents;
  }
  result.archive = zip::write_archive(entries);
  return result;
}

bool CorpusStore::has_corpus(const std::string& corpus_id) const {
  std::lock_guard lock(corpora_mutex_);
  return corpora_.count(corpus_id) > 0;
}

std::vector<std::string> CorpusStore::list_corpora() const {
  std::lock_guard lock(corpora_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, c] : corpora_) out.push_back(id);
  return out;
}

CorpusSummary CorpusStore::summary(const std::string& corpus_id) const {
  auto corpus = find(corpus_id);
  std::shared_lock lock(corpus->mutex);
  CorpusSummary s;
  s.corpus_id = corpus_id;
  s.documents = corpus->documents.size();
  for (const auto& [id, rec] : corpus->documents) {
    for (const auto& [layer, ref] : rec.layers) ++s.layers[layer];
    if (rec.spans) ++s.with_spans;
  }
  for (const auto& [name, blob] : corpus->artifacts) s.artifacts.push_back(name);
  return s;
}

std::vector<std::string> CorpusStore::list_documents(const std::string& corpus_id) const {
  auto corpus = find(corpus_id);
  std::shared_lock lock(corpus->mutex);
  std::vector<std::string> out;
  for (const auto& [id, rec] : corpus->documents) out.push_back(id);
  return out;
}

DocumentRecord CorpusStore::document(const std::string& corpus_id, const std::string& doc_id) const {
  auto corpus = find(corpus_id);
  std::shared_lock lock(corpus->mutex);
  auto it = corpus->documents.find(doc_id);
  if (it == corpus->documents.end()) throw NotFound("unknown document " + corpus_id + "/" + doc_id);
  return it->second;
}

std::string CorpusStore::raw_text(const std::string& corpus_id, const std::string& doc_id) const {
  auto corpus = find(corpus_id);
  std::shared_lock lock(corpus->mutex);
  auto it = corpus->documents.find(doc_id);
  if (it == corpus->documents.end()) throw NotFound("unknown document " + corpus_id + "/" + doc_id);
  return read_blob(*corpus, it->second.text_blob);
}

bool CorpusStore::has_layer(const std::string& corpus_id, const std::string& doc_id,
                            const std::string& layer) const {
  auto corpus = find(corpus_id);
  std::shared_lock lock(corpus->mutex);
  auto it = corpus->documents.find(doc_id);
  return it != corpus->documents.end() && it->second.layers.count(layer) > 0;
}

conllu::Document CorpusStore::load_layer(const std::string& corpus_id, const std::string& doc_id,
                                         const std::string& layer) const {
  auto corpus = find(corpus_id);
  std::string serialized, raw;
  std::map<std::string, std::string> metadata;
  {
    std::shared_lock lock(corpus->mutex);
    auto it = corpus->documents.find(doc_id);
    if (it == corpus->documents.end()) throw NotFound("unknown document " + corpus_id + "/" + doc_id);
    auto lt = it->second.layers.find(layer);
    if (lt == it->second.layers.end())
      throw NotFound("document " + doc_id + " has no layer '" + layer + "'");
    serialized = read_blob(*corpus, lt->second.blob);
    raw = read_blob(*corpus, lt->second.text_blob.empty() ? it->second.text_blob : lt->second.text_blob);
    metadata = it->second.metadata;
  }
  auto doc = conllu::parse_document(serialized);
  doc.doc_id = doc_id;
  doc.raw_text = std::move(raw);
  for (auto& [k, v] : metadata) doc.metadata.emplace(k, v);
  return doc;
}

void CorpusStore::attach_annotation(const std::string& corpus_id, const std::string& doc_id,
                                    const std::string& layer, const conllu::Document& doc) {
  check_identifier(layer, "layer name");
  conllu::validate(doc);
  auto corpus = find(corpus_id);
  std::string original;
  {
    std::shared_lock lock(corpus->mutex);
    auto it = corpus->documents.find(doc_id);
    if (it == corpus->documents.end()) throw NotFound("unknown document " + corpus_id + "/" + doc_id);
    original = it->second.text_blob;
  }
  LayerRef ref;
  ref.blob = write_blob(*corpus, conllu::serialize_document(doc), ".conllup");
  if (!doc.raw_text.empty()) {
    std::string key = write_blob(*corpus, doc.raw_text, ".txt");
    if (key != original) ref.text_blob = key;
  }
  std::unique_lock lock(corpus->mutex);
  auto it = corpus->documents.find(doc_id);
  if (it == corpus->documents.end()) throw NotFound("unknown document " + corpus_id + "/" + doc_id);
  auto previous = it->second.layers;
  it->second.layers[layer] = ref;
  try {
    save_manifest(*corpus);
  } catch (...) {
    it->second.layers = previous;
    throw;
  }
}

void CorpusStore::put_artifact(const std::string& corpus_id, const std::string& name,
                               std::string_view content) {
  if (name.empty() || name.front() == '/' || name.find("..") != std::string::npos)
    throw InvalidArgument("invalid artifact name: " + name);
  auto corpus = find(corpus_id);
  std::string key = write_blob(*corpus, content, ".bin");
  std::unique_lock lock(corpus->mutex);
  auto previous = corpus->artifacts;
  corpus->artifacts[name] = key;
  try {
    save_manifest(*corpus);
  } catch (...) {
    corpus->artifacts = previous;
    throw;
  }
}

std::string CorpusStore::get_artifact(const std::string& corpus_id, const std::string& name) const {
  auto corpus = find(corpus_id);
  std::shared_lock lock(corpus->mutex);
  auto it = corpus->artifacts.find(name);
  if (it == corpus->artifacts.end()) throw NotFound("unknown artifact " + corpus_id + "/" + name);
  return read_blob(*corpus, it->second);
}

std::vector<std::string> CorpusStore::list_artifacts(const std::string& corpus_id) const {
  auto corpus = find(corpus_id);
  std::shared_lock lock(corpus->mutex);
  std::vector<std::string> out;
  for (const auto& [name, key] : corpus->artifacts) out.push_back(name);
  return out;
}

}  // namespace corpusflow::store
