#pragma once

// In-memory model for annotated documents and the CoNLL-U / CoNLL-U Plus
// codecs. A Document is a token table whose columns are declared by a
// ColumnSchema; the canonical schema is the 10-column CoNLL-U layout.
//
// Canonical serialized form:
//
//   # global.columns = ID FORM ... RELATE:NE      (CoNLL-U Plus header)
//   # newdoc id = <doc_id>
//   # meta::<key> = <value>                        (sorted by key)
//   # <sentence comment>
//   1<TAB>...                                      (one row per token)
//   <blank line after every sentence>
//
// Token character offsets are written into the MISC column as trailing
// "start_char=<n>|end_char=<m>" items. The raw document text is not part of
// the serialized form; the corpus store keeps it next to the layers.

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace corpusflow::conllu {

inline constexpr std::string_view kEmpty = "_";

inline constexpr std::string_view kId = "ID";
inline constexpr std::string_view kForm = "FORM";
inline constexpr std::string_view kLemma = "LEMMA";
inline constexpr std::string_view kUpos = "UPOS";
inline constexpr std::string_view kXpos = "XPOS";
inline constexpr std::string_view kFeats = "FEATS";
inline constexpr std::string_view kHead = "HEAD";
inline constexpr std::string_view kDeprel = "DEPREL";
inline constexpr std::string_view kDeps = "DEPS";
inline constexpr std::string_view kMisc = "MISC";

inline constexpr std::string_view kNerColumn = "RELATE:NE";
inline constexpr std::string_view kGeonamesColumn = "RELATE:GEONAMES";
inline constexpr std::string_view kChunkColumn = "RELATE:CHUNK";
inline constexpr std::string_view kPhoneticColumn = "RELATE:PHON";
inline constexpr std::string_view kHyphenationColumn = "RELATE:HYPH";
inline constexpr std::string_view kBioNerColumn = "RELATE:BIONER";

const std::vector<std::string>& canonical_columns();
bool is_canonical_column(std::string_view name);
// Canonical names, or "<namespace>:<name>" with both parts non-empty and no
// white space.
bool is_valid_column_name(std::string_view name);

class ColumnSchema {
 public:
  // The canonical 10-column CoNLL-U schema.
  ColumnSchema();
  // Throws InvalidArgument unless columns are unique, valid, and start with
  // ID, FORM.
  explicit ColumnSchema(std::vector<std::string> columns);

  static const ColumnSchema& canonical();

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return columns_.size(); }
  const std::string& operator[](std::size_t i) const { return columns_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  bool is_canonical() const;

  bool operator==(const ColumnSchema&) const = default;

 private:
  std::vector<std::string> columns_;
};

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  auto operator<=>(const CharSpan&) const = default;
};

struct Token {
  std::vector<std::string> values;
  std::optional<CharSpan> offsets;

  const std::string& id() const { return values.at(0); }
  const std::string& form() const { return values.at(1); }
  // "n-m" multiword ranges and "n.m" empty nodes are carried verbatim and
  // skipped by every token-level operation.
  bool is_multiword() const;
  bool is_empty_node() const;
  bool is_word() const { return !is_multiword() && !is_empty_node(); }

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<std::string> comments;  // without the leading "# "

  bool operator==(const Sentence&) const = default;
};

struct Document {
  std::string doc_id;
  std::string raw_text;
  std::map<std::string, std::string> metadata;
  ColumnSchema schema;
  std::vector<Sentence> sentences;

  // Number of word tokens (multiword ranges and empty nodes excluded).
  std::size_t word_count() const;
  std::size_t column(std::string_view name) const;  // throws InvalidArgument

  bool operator==(const Document&) const = default;
};

// Equality of everything the serialized form carries (all but raw_text).
bool same_annotation(const Document& a, const Document& b);

// Throws InvalidArgument describing the first violated invariant.
void validate(const Document& doc);

Document parse_document(std::string_view input,
                        const ColumnSchema& default_schema = ColumnSchema::canonical());
Document parse_document(std::istream& input,
                        const ColumnSchema& default_schema = ColumnSchema::canonical());

// The global.columns header is written when with_header is set, and always
// for non-canonical schemas (the file would not parse back otherwise).
std::string serialize_document(const Document& doc, bool with_header = true);

// Appends `name` as the last column filled with `fill`. No-op when present.
Document ensure_column(Document doc, std::string_view name, std::string_view fill = kEmpty);

// Worker wire payload <-> Document. Payload tokens use lower-case keys for
// canonical columns ("form", "upos", ...), "ner" for RELATE:NE, and the
// column name itself for any other namespaced column.
std::string payload_key(std::string_view column);
std::string column_for_payload_key(std::string_view key);

Document from_worker_payload(const nlohmann::json& payload, const ColumnSchema& schema);
nlohmann::json to_worker_payload(const Document& doc, const std::vector<std::string>& operations);

}  // namespace corpusflow::conllu
