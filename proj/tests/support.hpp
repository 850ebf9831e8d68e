#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "corpusflow/conllu.hpp"

namespace testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(CORPUSFLOW_FIXTURES) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string& name) { return read_file(fixture_path(name)); }

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("corpusflow-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

// Hand-built document: one sentence per inner vector, tokens as
// (form, [start, end)) pairs; raw text assembled with single spaces.
inline corpusflow::conllu::Document tokenized(
    const std::vector<std::vector<std::string>>& sentences,
    const corpusflow::conllu::ColumnSchema& schema = corpusflow::conllu::ColumnSchema::canonical()) {
  corpusflow::conllu::Document doc;
  doc.schema = schema;
  std::size_t pos = 0;
  for (const auto& s : sentences) {
    corpusflow::conllu::Sentence sent;
    for (std::size_t i = 0; i < s.size(); ++i) {
      corpusflow::conllu::Token t;
      t.values.assign(schema.size(), "_");
      t.values[0] = std::to_string(i + 1);
      t.values[1] = s[i];
      if (!doc.raw_text.empty()) {
        doc.raw_text += ' ';
        ++pos;
      }
      std::size_t len = 0;
      for (unsigned char c : s[i])
        if ((c & 0xC0) != 0x80) ++len;
      t.offsets = corpusflow::conllu::CharSpan{pos, pos + len};
      doc.raw_text += s[i];
      pos += len;
      sent.tokens.push_back(std::move(t));
    }
    doc.sentences.push_back(std::move(sent));
  }
  return doc;
}

inline std::vector<std::string> column_values(const corpusflow::conllu::Document& doc, const std::string& column) {
  std::size_t c = doc.column(column);
  std::vector<std::string> out;
  for (const auto& s : doc.sentences)
    for (const auto& t : s.tokens) out.push_back(t.values[c]);
  return out;
}

}  // namespace testing
