#pragma once

// Perfect-match GeoNames linking of LOC entities.
//
// The index maps normalized place names (standard and alternate) to
// GeoNames codes. Linking looks up each LOC entity as a whole expression;
// sub-expressions of an unmatched entity are never tried.

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpusflow/conllu.hpp"

namespace corpusflow::geonames {

using Code = std::uint64_t;

// NFC + case folding + white space collapsing. Diacritics are kept.
std::string normalize_name(std::string_view name);

class GeonamesIndex {
 public:
  void add(std::string_view name, Code code);

  // Empty set when absent.
  const std::set<Code>& lookup(std::string_view name) const;

  std::size_t name_count() const { return entries_.size(); }
  std::size_t code_count() const { return codes_.size(); }
  // Distinct (name, code) pairs.
  std::size_t entry_count() const { return entry_count_; }
  std::size_t warnings() const { return warnings_; }
  void add_warning() { ++warnings_; }

 private:
  std::unordered_map<std::string, std::set<Code>> entries_;
  std::set<Code> codes_;
  std::size_t entry_count_ = 0;
  std::size_t warnings_ = 0;
};

// Extract rows: "code<TAB>name<TAB>alt1|alt2|..." (third field optional).
// Blank lines and lines starting with '#' are ignored. A non-numeric code is
// a ParseError; a row with an empty standard name is skipped with a warning.
GeonamesIndex build_index(std::istream& extract);
GeonamesIndex build_index_from_string(std::string_view extract);
GeonamesIndex load_index(const std::string& path);

// Converts rows of the official GeoNames dump (geonameid, name, asciiname,
// alternatenames, ... TAB separated) into the extract format above.
std::string convert_dump(std::istream& dump);

struct LinkStats {
  std::size_t expressions = 0;
  std::size_t linked = 0;
  std::size_t unmatched = 0;
  std::size_t ambiguous = 0;
};

struct LinkResult {
  conllu::Document document;
  LinkStats stats;
};

// Every LOC entity (B-LOC I-LOC*, or a run of bare LOC tags) inside one
// sentence is joined with single spaces and looked up. A singleton code set
// fills out_column on all its tokens; everything else stays "_".
LinkResult link_document(conllu::Document doc, std::string_view ner_column,
                         const GeonamesIndex& index,
                         std::string_view out_column = conllu::kGeonamesColumn);

}  // namespace corpusflow::geonames
