#pragma once

// Standoff spans and the gold-corpus toolchain built on them: projection of
// character spans onto tokens as IOB tags, IO -> IOB conversion, gazetteer
// extraction from IOB columns, and entity anonymization.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "corpusflow/conllu.hpp"

namespace corpusflow::spans {

struct StandoffSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive, in code points
  std::string label;

  auto operator<=>(const StandoffSpan&) const = default;
};

// Contiguous run of word tokens inside one sentence.
struct EntityMention {
  std::size_t sentence = 0;
  std::size_t first = 0;  // index into Sentence::tokens
  std::size_t last = 0;   // inclusive
  std::string label;
  std::string surface;
};

// ".ann" files: one "start<TAB>end<TAB>label" per line, blank lines ignored.
std::vector<StandoffSpan> parse_standoff(std::string_view content);
std::string serialize_standoff(const std::vector<StandoffSpan>& spans);
// Throws InvalidArgument if a span is empty, has a bad label, or ends past
// text_length.
void validate_spans(const std::vector<StandoffSpan>& spans, std::size_t text_length);

// Overlap resolution: spans are ranked longest first, then by earliest
// start; a span overlapping an already accepted one is dropped. Returns the
// accepted spans in rank order.
std::vector<StandoffSpan> resolve_overlaps(std::vector<StandoffSpan> spans);

// Projects spans onto word tokens: a token belongs to a span iff their
// character ranges intersect; a token touched by several accepted spans goes
// to the highest-ranked one. Writes B-/I-/O into `column` (created if
// missing). Non-word rows get "_".
conllu::Document spans_to_iob(conllu::Document doc, const std::vector<StandoffSpan>& spans,
                              std::string_view column = conllu::kNerColumn);

std::vector<std::string> io_to_iob(const std::vector<std::string>& tags);

// IOB tags of one sentence column, with "_" treated as outside.
std::vector<EntityMention> entity_mentions(const conllu::Document& doc, std::string_view column,
                                           std::size_t* repaired = nullptr);

struct Gazetteer {
  std::set<std::pair<std::string, std::string>> entries;  // (label, surface)
  std::size_t repaired = 0;  // I- tags without a matching predecessor

  // "label<TAB>surface\n" lines, sorted, unique.
  std::string to_tsv() const;
};

Gazetteer extract_gazetteer(const std::vector<conllu::Document>& layers, std::string_view column);
// Reads a gazetteer TSV back; lines without a TAB are rejected.
Gazetteer parse_gazetteer(std::string_view tsv);

struct AnonymizationResult {
  conllu::Document document;
  // placeholder -> original surface, in order of first appearance.
  std::vector<std::pair<std::string, std::string>> mapping;
};

// (label, surface) pairs of the entity runs with a label in `labels`, in
// order of first appearance across `docs`.
using SurfaceList = std::vector<std::pair<std::string, std::string>>;
SurfaceList collect_surfaces(const std::vector<conllu::Document>& docs, std::string_view column,
                             const std::set<std::string>& labels);

// Replaces the FORM of every token of an entity run whose label is in
// `labels` with "[<LABEL>-<n>]", n numbering distinct surfaces per label in
// order of first appearance (in `corpus_surfaces` when given, so numbering
// is shared across a corpus). Untagged runs of word tokens spelling a known
// surface are replaced as well, so no surface survives in any FORM. LEMMA
// and namespaced columns other than `column` are reset to "_" on replaced
// tokens. When all word tokens carry offsets the raw text is rewritten and
// offsets shifted accordingly; otherwise the raw text is cleared.
// Occurrences of replaced surfaces in sentence comments are substituted too.
AnonymizationResult anonymize_document(conllu::Document doc, std::string_view column,
                                       const std::set<std::string>& labels,
                                       const SurfaceList* corpus_surfaces = nullptr);

}  // namespace corpusflow::spans
