#pragma once

// Minimal ZIP container support (stored and deflate entries, no ZIP64, no
// encryption). Writing is deterministic: entries keep their order and carry
// a fixed 1980-01-01 timestamp.

#include <string>
#include <string_view>
#include <vector>

namespace corpusflow::zip {

struct Entry {
  std::string name;
  std::string data;
  bool is_directory() const { return !name.empty() && name.back() == '/'; }
};

// Throws ParseError on anything that is not a readable archive.
std::vector<Entry> read_archive(std::string_view bytes);
std::string write_archive(const std::vector<Entry>& entries);

}  // namespace corpusflow::zip
