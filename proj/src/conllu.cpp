#include "corpusflow/conllu.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <iterator>
#include <set>
#include <sstream>

#include "corpusflow/error.hpp"
#include "corpusflow/text.hpp"

namespace corpusflow::conllu {

namespace {

constexpr std::string_view kHeaderPrefix = "# global.columns =";
constexpr std::string_view kNewdocPrefix = "# newdoc id = ";
constexpr std::string_view kMetaPrefix = "# meta::";
constexpr std::string_view kStartChar = "start_char";
constexpr std::string_view kEndChar = "end_char";

bool parse_size(std::string_view s, std::size_t& out) {
  if (s.empty() || s.size() > 19) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool is_decimal(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Decimal without superfluous leading zeros; these survive an int round trip.
bool is_canonical_int(std::string_view s) {
  return is_decimal(s) && (s.size() == 1 || s[0] != '0') && s.size() <= 15;
}

bool has_forbidden_chars(std::string_view s) {
  return s.find_first_of("\t\n\r") != std::string_view::npos;
}

// Splits trailing offset items off a MISC value. Offsets are taken only when
// both keys are present and numeric; otherwise the value is left as is.
std::optional<CharSpan> strip_offsets(std::string& misc) {
  if (misc == kEmpty) return std::nullopt;
  std::vector<std::string> kept;
  std::optional<std::size_t> start, end;
  for (auto& item : text::split(misc, '|')) {
    auto eq = item.find('=');
    std::size_t v = 0;
    if (eq != std::string::npos) {
      std::string_view key(item.data(), eq);
      std::string_view val(item.data() + eq + 1, item.size() - eq - 1);
      if (key == kStartChar && !start && parse_size(val, v)) {
        start = v;
        continue;
      }
      if (key == kEndChar && !end && parse_size(val, v)) {
        end = v;
        continue;
      }
    }
    kept.push_back(std::move(item));
  }
  if (!start || !end || *start >= *end) return std::nullopt;
  misc = kept.empty() ? std::string(kEmpty) : text::join(kept, "|");
  return CharSpan{*start, *end};
}

std::string misc_with_offsets(const std::string& misc, const CharSpan& span) {
  std::string offsets = std::string(kStartChar) + "=" + std::to_string(span.start) + "|" +
                        std::string(kEndChar) + "=" + std::to_string(span.end);
  if (misc == kEmpty) return offsets;
  return misc + "|" + offsets;
}

void check_sentence_ids(const Sentence& sentence, std::size_t index) {
  std::size_t expected = 1;
  std::size_t last_word = 0;
  for (const auto& token : sentence.tokens) {
    const std::string& id = token.id();
    auto fail = [&](const std::string& why) {
      throw InvalidArgument("sentence " + std::to_string(index + 1) + ": token id '" + id +
                            "' " + why);
    };
    if (auto dash = id.find('-'); dash != std::string::npos) {
      std::size_t a = 0, b = 0;
      if (!parse_size(std::string_view(id).substr(0, dash), a) ||
          !parse_size(std::string_view(id).substr(dash + 1), b) || b < a)
        fail("is not a valid range");
      if (a != expected) fail("range does not start at the next word");
      continue;
    }
    if (auto dot = id.find('.'); dot != std::string::npos) {
      std::size_t a = 0, b = 0;
      if (!parse_size(std::string_view(id).substr(0, dot), a) ||
          !parse_size(std::string_view(id).substr(dot + 1), b))
        fail("is not a valid empty node id");
      if (a != last_word) fail("empty node out of order");
      continue;
    }
    std::size_t n = 0;
    if (!parse_size(id, n) || n != expected) fail("expected " + std::to_string(expected));
    last_word = n;
    ++expected;
  }
}

void check_comment(const std::string& comment) {
  if (comment.find_first_of("\n\r") != std::string::npos)
    throw InvalidArgument("comment contains a line break");
  if (text::starts_with(comment, "newdoc id =") || text::starts_with(comment, "meta::") ||
      text::starts_with(comment, "global.columns"))
    throw InvalidArgument("sentence comment uses a reserved document-level prefix: " + comment);
}

}  // namespace

const std::vector<std::string>& canonical_columns() {
  static const std::vector<std::string> columns = {"ID",    "FORM", "LEMMA",  "UPOS", "XPOS",
                                                   "FEATS", "HEAD", "DEPREL", "DEPS", "MISC"};
  return columns;
}

bool is_canonical_column(std::string_view name) {
  const auto& c = canonical_columns();
  return std::find(c.begin(), c.end(), name) != c.end();
}

bool is_valid_column_name(std::string_view name) {
  if (is_canonical_column(name)) return true;
  if (name.empty() || name.find_first_of(" \t\r\n") != std::string_view::npos) return false;
  auto colon = name.find(':');
  return colon != std::string_view::npos && colon > 0 && colon + 1 < name.size();
}

ColumnSchema::ColumnSchema() : columns_(canonical_columns()) {}

ColumnSchema::ColumnSchema(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.size() < 2 || columns_[0] != kId || columns_[1] != kForm)
    throw InvalidArgument("schema must start with ID FORM");
  std::set<std::string_view> seen;
  for (const auto& c : columns_) {
    if (!is_valid_column_name(c)) throw InvalidArgument("invalid column name '" + c + "'");
    if (!seen.insert(c).second) throw InvalidArgument("duplicate column '" + c + "'");
  }
}

const ColumnSchema& ColumnSchema::canonical() {
  static const ColumnSchema schema;
  return schema;
}

std::optional<std::size_t> ColumnSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i] == name) return i;
  return std::nullopt;
}

bool ColumnSchema::is_canonical() const { return columns_ == canonical_columns(); }

bool Token::is_multiword() const { return id().find('-') != std::string::npos; }
bool Token::is_empty_node() const { return id().find('.') != std::string::npos; }

std::size_t Document::word_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences)
    for (const auto& t : s.tokens)
      if (t.is_word()) ++n;
  return n;
}

std::size_t Document::column(std::string_view name) const {
  auto idx = schema.index_of(name);
  if (!idx) throw InvalidArgument("column '" + std::string(name) + "' not in schema");
  return *idx;
}

bool same_annotation(const Document& a, const Document& b) {
  return a.doc_id == b.doc_id && a.metadata == b.metadata && a.schema == b.schema &&
         a.sentences == b.sentences;
}

void validate(const Document& doc) {
  if (has_forbidden_chars(doc.doc_id)) throw InvalidArgument("doc_id contains a line break");
  for (const auto& [key, value] : doc.metadata) {
    if (key.empty() || key.find_first_of(" \t\r\n=") != std::string::npos)
      throw InvalidArgument("invalid metadata key '" + key + "'");
    if (value.find_first_of("\r\n") != std::string::npos)
      throw InvalidArgument("metadata value for '" + key + "' contains a line break");
  }
  const std::size_t text_len = text::codepoint_length(doc.raw_text);
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const auto& sentence = doc.sentences[si];
    if (sentence.tokens.empty())
      throw InvalidArgument("sentence " + std::to_string(si + 1) + " has no tokens");
    for (const auto& c : sentence.comments) check_comment(c);
    for (const auto& token : sentence.tokens) {
      if (token.values.size() != doc.schema.size())
        throw InvalidArgument("token has " + std::to_string(token.values.size()) +
                              " values, schema has " + std::to_string(doc.schema.size()));
      for (const auto& v : token.values) {
        if (v.empty()) throw InvalidArgument("empty token value (use \"_\")");
        if (has_forbidden_chars(v)) throw InvalidArgument("token value contains TAB or newline");
      }
      if (token.offsets) {
        if (token.offsets->start >= token.offsets->end)
          throw InvalidArgument("token '" + token.form() + "' has an empty character span");
        if (!doc.raw_text.empty() && token.offsets->end > text_len)
          throw InvalidArgument("token '" + token.form() + "' offsets exceed the text length");
      }
    }
    check_sentence_ids(sentence, si);
  }
}

Document parse_document(std::string_view input, const ColumnSchema& default_schema) {
  if (auto bad = text::find_invalid_utf8(input); bad != text::npos) {
    auto line = static_cast<std::size_t>(std::count(input.begin(), input.begin() + bad, '\n')) + 1;
    throw ParseError("input is not valid UTF-8", line);
  }

  Document doc;
  doc.schema = default_schema;
  Sentence current;
  bool header_allowed = true;
  bool doc_comments_allowed = true;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  auto flush = [&]() {
    if (current.tokens.empty()) {
      if (!current.comments.empty()) throw ParseError("comment block without tokens", line_no);
      return;
    }
    try {
      check_sentence_ids(current, doc.sentences.size());
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
    doc.sentences.push_back(std::move(current));
    current = Sentence{};
  };

  while (pos < input.size()) {
    std::size_t nl = input.find('\n', pos);
    std::string_view line =
        input.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? input.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (header_allowed && text::starts_with(line, "# global.columns")) {
      if (!text::starts_with(line, kHeaderPrefix)) throw ParseError("malformed header", line_no);
      auto names = text::split_ws(line.substr(kHeaderPrefix.size()));
      if (names.empty()) throw ParseError("header declares no columns", line_no);
      try {
        doc.schema = ColumnSchema(std::move(names));
      } catch (const InvalidArgument& e) {
        throw ParseError(std::string("malformed header: ") + e.what(), line_no);
      }
      header_allowed = false;
      continue;
    }
    header_allowed = false;

    if (line.empty()) {
      flush();
      doc_comments_allowed = false;
      continue;
    }
    if (line.front() == '#') {
      if (doc_comments_allowed && current.comments.empty()) {
        if (text::starts_with(line, kNewdocPrefix)) {
          doc.doc_id = std::string(line.substr(kNewdocPrefix.size()));
          continue;
        }
        if (text::starts_with(line, kMetaPrefix)) {
          auto body = line.substr(kMetaPrefix.size());
          auto eq = body.find(" = ");
          if (eq == std::string_view::npos || eq == 0)
            throw ParseError("malformed metadata comment", line_no);
          doc.metadata[std::string(body.substr(0, eq))] = std::string(body.substr(eq + 3));
          continue;
        }
      }
      doc_comments_allowed = false;
      std::string_view comment = line.substr(1);
      if (!comment.empty() && comment.front() == ' ') comment.remove_prefix(1);
      current.comments.emplace_back(comment);
      continue;
    }

    doc_comments_allowed = false;
    auto fields = text::split(line, '\t');
    if (fields.size() != doc.schema.size())
      throw ParseError("expected " + std::to_string(doc.schema.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    Token token;
    for (auto& f : fields)
      if (f.empty()) f = std::string(kEmpty);
    token.values = std::move(fields);
    if (auto misc = doc.schema.index_of(kMisc)) token.offsets = strip_offsets(token.values[*misc]);
    current.tokens.push_back(std::move(token));
  }
  flush();
  return doc;
}

Document parse_document(std::istream& input, const ColumnSchema& default_schema) {
  std::string data((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
  return parse_document(data, default_schema);
}

std::string serialize_document(const Document& doc, bool with_header) {
  std::string out;
  if (with_header || !doc.schema.is_canonical()) {
    out += "# global.columns = ";
    out += text::join(doc.schema.columns(), " ");
    out += '\n';
  }
  if (!doc.doc_id.empty()) {
    out += kNewdocPrefix;
    out += doc.doc_id;
    out += '\n';
  }
  for (const auto& [key, value] : doc.metadata) {
    out += kMetaPrefix;
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  auto misc = doc.schema.index_of(kMisc);
  for (const auto& sentence : doc.sentences) {
    for (const auto& c : sentence.comments) {
      out += "# ";
      out += c;
      out += '\n';
    }
    for (const auto& token : sentence.tokens) {
      for (std::size_t i = 0; i < token.values.size(); ++i) {
        if (i) out += '\t';
        if (misc && i == *misc && token.offsets)
          out += misc_with_offsets(token.values[i], *token.offsets);
        else
          out += token.values[i];
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

Document ensure_column(Document doc, std::string_view name, std::string_view fill) {
  if (!is_valid_column_name(name))
    throw InvalidArgument("invalid column name '" + std::string(name) + "'");
  if (doc.schema.contains(name)) return doc;
  if (is_canonical_column(name)) {
    // A canonical column may only be appended if it still follows every
    // canonical column already present.
    const auto& canon = canonical_columns();
    auto rank = [&](std::string_view c) { return std::find(canon.begin(), canon.end(), c) - canon.begin(); };
    for (const auto& existing : doc.schema.columns())
      if (is_canonical_column(existing) && rank(existing) > rank(name))
        throw InvalidArgument("canonical column '" + std::string(name) + "' cannot follow '" +
                              existing + "'");
  }
  auto columns = doc.schema.columns();
  columns.emplace_back(name);
  doc.schema = ColumnSchema(std::move(columns));
  for (auto& sentence : doc.sentences)
    for (auto& token : sentence.tokens) token.values.emplace_back(fill);
  return doc;
}

std::string payload_key(std::string_view column) {
  if (column == kNerColumn) return "ner";
  if (is_canonical_column(column)) return text::to_lower(column);
  return std::string(column);
}

std::string column_for_payload_key(std::string_view key) {
  if (key == "ner") return std::string(kNerColumn);
  for (const auto& c : canonical_columns())
    if (text::to_lower(c) == key) return c;
  return std::string(key);
}

namespace {

std::string payload_value(const nlohmann::json& v, std::string_view key) {
  if (v.is_null()) return std::string(kEmpty);
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    return s.empty() ? std::string(kEmpty) : s;
  }
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw InvalidArgument("payload field '" + std::string(key) + "' must be a string or integer");
}

std::optional<std::size_t> payload_offset(const nlohmann::json& token, const char* key) {
  auto it = token.find(key);
  if (it == token.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer() || it->get<long long>() < 0)
    throw InvalidArgument(std::string("payload field '") + key + "' must be a non-negative integer");
  return it->get<std::size_t>();
}

}  // namespace

Document from_worker_payload(const nlohmann::json& payload, const ColumnSchema& schema) {
  if (!payload.is_object()) throw InvalidArgument("worker payload must be a JSON object");
  Document doc;
  doc.schema = schema;
  if (auto it = payload.find("text"); it != payload.end() && it->is_string())
    doc.raw_text = it->get<std::string>();
  auto sentences = payload.find("sentences");
  if (sentences == payload.end() || sentences->is_null()) return doc;
  if (!sentences->is_array()) throw InvalidArgument("payload 'sentences' must be an array");

  const auto misc = schema.index_of(kMisc);
  for (const auto& s : *sentences) {
    Sentence sentence;
    if (auto c = s.find("comments"); c != s.end() && c->is_array())
      for (const auto& line : *c) sentence.comments.push_back(line.get<std::string>());
    auto tokens = s.find("tokens");
    if (tokens == s.end() || !tokens->is_array() || tokens->empty()) continue;
    std::size_t position = 0;
    for (const auto& t : *tokens) {
      if (!t.is_object()) throw InvalidArgument("payload token must be an object");
      Token token;
      token.values.assign(schema.size(), std::string(kEmpty));
      token.values[0] = std::to_string(++position);
      for (const auto& [key, value] : t.items()) {
        if (key == kStartChar || key == kEndChar) continue;
        std::string column = column_for_payload_key(key);
        auto idx = schema.index_of(column);
        if (!idx)
          throw InvalidArgument("payload field '" + key + "' maps to column " + column +
                                " which is absent from the schema");
        token.values[*idx] = payload_value(value, key);
      }
      auto start = payload_offset(t, "start_char");
      auto end = payload_offset(t, "end_char");
      if (start && end) {
        if (*start >= *end) throw InvalidArgument("payload token has an empty character span");
        token.offsets = CharSpan{*start, *end};
      }
      if (misc) {
        // Offsets embedded in a misc string are lifted into the span field.
        auto lifted = strip_offsets(token.values[*misc]);
        if (!token.offsets) token.offsets = lifted;
      }
      sentence.tokens.push_back(std::move(token));
    }
    doc.sentences.push_back(std::move(sentence));
  }
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) check_sentence_ids(doc.sentences[i], i);
  return doc;
}

nlohmann::json to_worker_payload(const Document& doc, const std::vector<std::string>& operations) {
  nlohmann::json payload = {{"text", doc.raw_text}, {"operations", operations}};
  auto& sentences = payload["sentences"] = nlohmann::json::array();
  for (const auto& sentence : doc.sentences) {
    nlohmann::json s = nlohmann::json::object();
    if (!sentence.comments.empty()) s["comments"] = sentence.comments;
    auto& tokens = s["tokens"] = nlohmann::json::array();
    for (const auto& token : sentence.tokens) {
      nlohmann::json t = nlohmann::json::object();
      const std::string& id = token.id();
      if (is_canonical_int(id))
        t["id"] = std::stoll(id);
      else
        t["id"] = id;
      for (std::size_t i = 1; i < token.values.size(); ++i) {
        const std::string& v = token.values[i];
        if (v == kEmpty) continue;
        t[payload_key(doc.schema[i])] = v;
      }
      if (token.offsets) {
        t["start_char"] = token.offsets->start;
        t["end_char"] = token.offsets->end;
      }
      tokens.push_back(std::move(t));
    }
    sentences.push_back(std::move(s));
  }
  return payload;
}

}  // namespace corpusflow::conllu
