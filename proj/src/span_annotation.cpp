#include "corpusflow/span_annotation.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <optional>

#include "corpusflow/error.hpp"
#include "corpusflow/text.hpp"

namespace corpusflow::spans {

namespace {

constexpr std::size_t kNoOwner = std::numeric_limits<std::size_t>::max();

bool parse_index(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool valid_label(std::string_view label) {
  if (label.empty()) return false;
  for (char32_t cp : text::decode_utf8(label))
    if (text::is_space(cp)) return false;
  return true;
}

bool intersects(std::size_t a_start, std::size_t a_end, std::size_t b_start, std::size_t b_end) {
  return a_start < b_end && b_start < a_end;
}

bool is_outside(std::string_view tag) { return tag == "O" || tag == conllu::kEmpty; }

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

std::vector<StandoffSpan> parse_standoff(std::string_view content) {
  std::vector<StandoffSpan> out;
  std::size_t line_no = 0;
  for (auto& raw : text::split(content, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, '\t');
    if (fields.size() != 3) throw ParseError("expected start<TAB>end<TAB>label", line_no);
    StandoffSpan span;
    if (!parse_index(fields[0], span.start) || !parse_index(fields[1], span.end))
      throw ParseError("span offsets must be non-negative integers", line_no);
    span.label = fields[2];
    if (span.start >= span.end) throw ParseError("span is empty or reversed", line_no);
    if (!valid_label(span.label)) throw ParseError("span label is empty or contains white space", line_no);
    out.push_back(std::move(span));
  }
  return out;
}

std::string serialize_standoff(const std::vector<StandoffSpan>& spans) {
  std::string out;
  for (const auto& s : spans)
    out += std::to_string(s.start) + "\t" + std::to_string(s.end) + "\t" + s.label + "\n";
  return out;
}

void validate_spans(const std::vector<StandoffSpan>& spans, std::size_t text_length) {
  for (const auto& s : spans) {
    std::string where = "span [" + std::to_string(s.start) + "," + std::to_string(s.end) + ")";
    if (s.start >= s.end) throw InvalidArgument(where + " is empty");
    if (!valid_label(s.label)) throw InvalidArgument(where + " has an invalid label");
    if (s.end > text_length)
      throw InvalidArgument(where + " exceeds the text length " + std::to_string(text_length));
  }
}

std::vector<StandoffSpan> resolve_overlaps(std::vector<StandoffSpan> spans) {
  std::stable_sort(spans.begin(), spans.end(), [](const StandoffSpan& a, const StandoffSpan& b) {
    std::size_t la = a.end - a.start, lb = b.end - b.start;
    if (la != lb) return la > lb;
    if (a.start != b.start) return a.start < b.start;
    return a.label < b.label;
  });
  std::vector<StandoffSpan> accepted;
  for (auto& s : spans) {
    bool clash = std::any_of(accepted.begin(), accepted.end(), [&](const StandoffSpan& a) {
      return intersects(s.start, s.end, a.start, a.end);
    });
    if (!clash) accepted.push_back(std::move(s));
  }
  return accepted;
}

conllu::Document spans_to_iob(conllu::Document doc, const std::vector<StandoffSpan>& spans,
                              std::string_view column) {
  validate_spans(spans, text::codepoint_length(doc.raw_text));
  for (const auto& sentence : doc.sentences)
    for (const auto& token : sentence.tokens)
      if (token.is_word() && !token.offsets)
        throw InvalidArgument("token " + token.id() + " ('" + token.form() +
                              "') has no character offsets");

  doc = conllu::ensure_column(std::move(doc), column);
  const std::size_t col = doc.column(column);
  const auto accepted = resolve_overlaps(spans);

  for (auto& sentence : doc.sentences) {
    std::size_t previous = kNoOwner;
    for (auto& token : sentence.tokens) {
      if (!token.is_word()) {
        token.values[col] = std::string(conllu::kEmpty);
        continue;
      }
      std::size_t owner = kNoOwner;
      for (std::size_t rank = 0; rank < accepted.size(); ++rank) {
        if (intersects(token.offsets->start, token.offsets->end, accepted[rank].start,
                       accepted[rank].end)) {
          owner = rank;
          break;
        }
      }
      if (owner == kNoOwner)
        token.values[col] = "O";
      else
        token.values[col] = (owner == previous ? "I-" : "B-") + accepted[owner].label;
      previous = owner;
    }
  }
  return doc;
}

std::vector<std::string> io_to_iob(const std::vector<std::string>& tags) {
  std::vector<std::string> out;
  out.reserve(tags.size());
  const std::string* previous = nullptr;
  for (const auto& tag : tags) {
    if (is_outside(tag)) {
      out.push_back(tag);
      previous = nullptr;
      continue;
    }
    out.push_back((previous && *previous == tag ? "I-" : "B-") + tag);
    previous = &tag;
  }
  return out;
}

std::vector<EntityMention> entity_mentions(const conllu::Document& doc, std::string_view column,
                                           std::size_t* repaired) {
  std::vector<EntityMention> mentions;
  auto col_idx = doc.schema.index_of(column);
  if (!col_idx) return mentions;
  const std::size_t col = *col_idx;

  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const auto& tokens = doc.sentences[si].tokens;
    std::optional<EntityMention> open;
    std::vector<std::string> forms;
    auto close = [&]() {
      if (!open) return;
      open->surface = text::join(forms, " ");
      mentions.push_back(std::move(*open));
      open.reset();
      forms.clear();
    };
    auto start = [&](std::size_t i, std::string label) {
      close();
      open = EntityMention{si, i, i, std::move(label), {}};
      forms.push_back(tokens[i].form());
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto& token = tokens[i];
      if (!token.is_word()) continue;
      const std::string& tag = token.values[col];
      if (is_outside(tag)) {
        close();
      } else if (text::starts_with(tag, "B-")) {
        start(i, tag.substr(2));
      } else if (text::starts_with(tag, "I-")) {
        std::string label = tag.substr(2);
        if (open && open->label == label) {
          open->last = i;
          forms.push_back(token.form());
        } else {
          if (repaired) ++*repaired;
          start(i, std::move(label));
        }
      } else if (open && open->label == tag) {
        // Bare IO label continuing a run.
        open->last = i;
        forms.push_back(token.form());
      } else {
        start(i, tag);
      }
    }
    close();
  }
  return mentions;
}

std::string Gazetteer::to_tsv() const {
  std::string out;
  for (const auto& [label, surface] : entries) out += label + "\t" + surface + "\n";
  return out;
}

Gazetteer extract_gazetteer(const std::vector<conllu::Document>& layers, std::string_view column) {
  Gazetteer gaz;
  for (const auto& doc : layers)
    for (auto& m : entity_mentions(doc, column, &gaz.repaired))
      gaz.entries.emplace(std::move(m.label), std::move(m.surface));
  return gaz;
}

Gazetteer parse_gazetteer(std::string_view tsv) {
  Gazetteer gaz;
  std::size_t line_no = 0;
  for (auto& raw : text::split(tsv, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size())
      throw ParseError("expected label<TAB>surface", line_no);
    gaz.entries.emplace(std::string(line.substr(0, tab)),
                        text::collapse_spaces(line.substr(tab + 1)));
  }
  return gaz;
}

SurfaceList collect_surfaces(const std::vector<conllu::Document>& docs, std::string_view column,
                             const std::set<std::string>& labels) {
  SurfaceList out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& doc : docs)
    for (auto& m : entity_mentions(doc, column))
      if (labels.count(m.label) && seen.emplace(m.label, m.surface).second)
        out.emplace_back(std::move(m.label), std::move(m.surface));
  return out;
}

AnonymizationResult anonymize_document(conllu::Document doc, std::string_view column,
                                       const std::set<std::string>& labels,
                                       const SurfaceList* corpus_surfaces) {
  AnonymizationResult result;
  if (labels.empty() || !doc.schema.contains(column)) {
    result.document = std::move(doc);
    return result;
  }
  const std::size_t tag_col = doc.column(column);
  const std::size_t form_col = 1;
  std::vector<std::size_t> reset_cols;
  for (std::size_t c = 0; c < doc.schema.size(); ++c) {
    const auto& name = doc.schema[c];
    if (c == tag_col) continue;
    if (name == conllu::kLemma || !conllu::is_canonical_column(name)) reset_cols.push_back(c);
  }

  // Numbering comes from the corpus-wide list when given, so placeholders
  // agree across documents; surfaces it lacks are numbered after it.
  SurfaceList surfaces = corpus_surfaces ? *corpus_surfaces : SurfaceList{};
  for (auto& s : collect_surfaces({doc}, column, labels))
    if (std::find(surfaces.begin(), surfaces.end(), s) == surfaces.end()) surfaces.push_back(std::move(s));
  std::map<std::pair<std::string, std::string>, std::string> placeholders;
  std::map<std::string, std::size_t> per_label;
  for (const auto& [label, surface] : surfaces)
    placeholders.emplace(std::make_pair(label, surface),
                         "[" + label + "-" + std::to_string(++per_label[label]) + "]");

  std::map<std::string, std::string> comment_replacements;  // surface -> placeholder text
  struct Replacement {
    std::size_t start, end;
    std::string placeholder;
  };
  std::vector<Replacement> replaced;
  std::set<std::string> mapped;

  auto replace_run = [&](std::vector<conllu::Token>& tokens, std::size_t first, std::size_t last,
                         const std::string& placeholder, const std::string& surface) {
    if (mapped.insert(placeholder).second) result.mapping.emplace_back(placeholder, surface);
    std::vector<std::string> pieces;
    for (std::size_t i = first; i <= last; ++i) {
      auto& token = tokens[i];
      token.values[form_col] = placeholder;
      for (std::size_t c : reset_cols) token.values[c] = std::string(conllu::kEmpty);
      if (token.is_word()) {
        pieces.push_back(placeholder);
        if (token.offsets) replaced.push_back({token.offsets->start, token.offsets->end, placeholder});
      }
    }
    comment_replacements[surface] = text::join(pieces, " ");
  };

  // Tagged mentions first, then untagged occurrences of any known surface.
  std::vector<std::vector<bool>> done(doc.sentences.size());
  for (std::size_t si = 0; si < doc.sentences.size(); ++si)
    done[si].assign(doc.sentences[si].tokens.size(), false);
  for (const auto& mention : entity_mentions(doc, column)) {
    if (!labels.count(mention.label)) continue;
    replace_run(doc.sentences[mention.sentence].tokens, mention.first, mention.last,
                placeholders.at({mention.label, mention.surface}), mention.surface);
    for (std::size_t i = mention.first; i <= mention.last; ++i) done[mention.sentence][i] = true;
  }

  std::map<std::vector<std::string>, const std::pair<std::string, std::string>*> by_forms;
  std::size_t longest = 0;
  for (const auto& entry : surfaces) {
    auto forms = text::split(entry.second, ' ');
    longest = std::max(longest, forms.size());
    by_forms.emplace(std::move(forms), &entry);  // first label listed wins
  }
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    auto& tokens = doc.sentences[si].tokens;
    std::vector<std::size_t> words;
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (tokens[i].is_word()) words.push_back(i);
    std::size_t w = 0;
    while (w < words.size()) {
      std::size_t matched = 0;
      for (std::size_t n = std::min(longest, words.size() - w); n > 0 && !matched; --n) {
        std::vector<std::string> window;
        bool free = true;
        for (std::size_t k = w; k < w + n; ++k) {
          free = free && !done[si][words[k]];
          window.push_back(tokens[words[k]].form());
        }
        if (!free) continue;
        auto it = by_forms.find(window);
        if (it == by_forms.end()) continue;
        const auto& [label, surface] = *it->second;
        replace_run(tokens, words[w], words[w + n - 1], placeholders.at({label, surface}), surface);
        for (std::size_t k = w; k < w + n; ++k) done[si][words[k]] = true;
        matched = n;
      }
      w += matched ? matched : 1;
    }
  }

  if (!result.mapping.empty() && !doc.raw_text.empty()) {
    bool all_offsets = true;
    for (const auto& s : doc.sentences)
      for (const auto& t : s.tokens)
        if (t.is_word() && !t.offsets) all_offsets = false;
    std::sort(replaced.begin(), replaced.end(),
              [](const Replacement& a, const Replacement& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < replaced.size(); ++i)
      if (replaced[i].start < replaced[i - 1].end) all_offsets = false;

    if (!all_offsets) {
      doc.raw_text.clear();
    } else {
      std::u32string source = text::decode_utf8(doc.raw_text);
      std::u32string rebuilt;
      // Cumulative shift after each replacement, keyed by original end.
      std::vector<std::pair<std::size_t, long long>> shifts;
      std::size_t cursor = 0;
      long long shift = 0;
      for (const auto& r : replaced) {
        rebuilt.append(source, cursor, r.start - cursor);
        std::u32string ph = text::decode_utf8(r.placeholder);
        rebuilt += ph;
        shift += static_cast<long long>(ph.size()) - static_cast<long long>(r.end - r.start);
        shifts.emplace_back(r.end, shift);
        cursor = r.end;
      }
      rebuilt.append(source, std::min(cursor, source.size()));
      auto moved = [&](std::size_t pos) {
        long long delta = 0;
        for (const auto& [end, s] : shifts) {
          if (end > pos) break;
          delta = s;
        }
        return static_cast<std::size_t>(static_cast<long long>(pos) + delta);
      };
      std::map<std::pair<std::size_t, std::size_t>, std::size_t> placeholder_len;
      for (const auto& r : replaced)
        placeholder_len[{r.start, r.end}] = text::codepoint_length(r.placeholder);
      for (auto& s : doc.sentences) {
        for (auto& t : s.tokens) {
          if (!t.offsets) continue;
          auto hit = t.is_word() ? placeholder_len.find({t.offsets->start, t.offsets->end})
                                 : placeholder_len.end();
          if (hit != placeholder_len.end()) {
            std::size_t start = moved(t.offsets->start);
            t.offsets = conllu::CharSpan{start, start + hit->second};
          } else {
            t.offsets = conllu::CharSpan{moved(t.offsets->start), moved(t.offsets->end)};
          }
        }
      }
      doc.raw_text = text::encode_utf8(rebuilt);
    }
  }

  if (!comment_replacements.empty()) {
    std::vector<std::pair<std::string, std::string>> ordered(comment_replacements.begin(),
                                                             comment_replacements.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    for (auto& s : doc.sentences)
      for (auto& c : s.comments)
        for (const auto& [from, to] : ordered) c = replace_all(std::move(c), from, to);
  }

  result.document = std::move(doc);
  return result;
}

}  // namespace corpusflow::spans
