#include "corpusflow/mock_worker.hpp"

#include <algorithm>

#include "corpusflow/error.hpp"
#include "corpusflow/text.hpp"

namespace corpusflow::mock {

namespace {

using nlohmann::json;

bool is_terminal(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'…'; }

bool is_vowel(char32_t cp) {
  static const std::u32string vowels = U"aeiouăâîAEIOUĂÂÎ";
  return vowels.find(cp) != std::u32string::npos;
}

bool in(const std::set<std::string, std::less<>>& set, std::string_view w) { return set.count(w) > 0; }

const std::map<std::string, std::string, std::less<>>& xpos_codes() {
  static const std::map<std::string, std::string, std::less<>> codes = {
      {"ADJ", "Afp"}, {"ADP", "Spsa"}, {"ADV", "Rgp"},  {"AUX", "Va"},  {"CCONJ", "Cc"},
      {"DET", "Di"},  {"NOUN", "Nc"},  {"NUM", "Mc"},   {"PRON", "Pp"}, {"PROPN", "Np"},
      {"PUNCT", "PUNCT"}, {"VERB", "Vm"}};
  return codes;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string lemma_of(const std::string& form, const std::string& upos) {
  if (upos == "PROPN" || upos == "PUNCT" || upos == "NUM") return form;
  std::string lower = text::to_lower(form);
  if (upos == "NOUN") {
    for (std::string_view suffix : {"ului", "lor", "ul"})
      if (ends_with(lower, suffix) && text::codepoint_length(lower) > suffix.size() + 2)
        return lower.substr(0, lower.size() - suffix.size());
  }
  return lower;
}

json& tokens_of(json& sentence) {
  if (!sentence.contains("tokens") || !sentence["tokens"].is_array()) sentence["tokens"] = json::array();
  return sentence["tokens"];
}

}  // namespace

std::vector<conllu::CharSpan> split_sentences(std::u32string_view text) {
  std::vector<conllu::CharSpan> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    while (i < n && text::is_space(text[i])) ++i;
    if (i >= n) break;
    std::size_t start = i;
    std::size_t end = n;
    while (i < n) {
      if (is_terminal(text[i])) {
        std::size_t j = i;
        while (j < n && is_terminal(text[j])) ++j;
        if (j == n || text::is_space(text[j])) {
          end = j;
          i = j;
          break;
        }
        i = j;
        continue;
      }
      ++i;
    }
    std::size_t trimmed = end;
    while (trimmed > start && text::is_space(text[trimmed - 1])) --trimmed;
    if (trimmed > start) out.push_back({start, trimmed});
    i = std::max(i, end);
  }
  return out;
}

std::vector<conllu::CharSpan> tokenize(std::u32string_view text, conllu::CharSpan range) {
  std::vector<conllu::CharSpan> out;
  std::size_t i = range.start;
  const std::size_t end = std::min(range.end, text.size());
  while (i < end) {
    if (text::is_space(text[i])) {
      ++i;
    } else if (text::is_punct(text[i])) {
      out.push_back({i, i + 1});
      ++i;
    } else {
      std::size_t j = i;
      while (j < end && !text::is_space(text[j]) && !text::is_punct(text[j])) ++j;
      out.push_back({i, j});
      i = j;
    }
  }
  return out;
}

std::string pos_tag(std::string_view form) {
  static const std::set<std::string, std::less<>> cconj = {"și", "sau", "dar", "iar", "ori"};
  static const std::set<std::string, std::less<>> adp = {"în",   "de",   "la",     "cu",  "pe",
                                                         "din",  "spre", "pentru", "prin", "după",
                                                         "către", "fără", "sub"};
  static const std::set<std::string, std::less<>> det = {"un", "o", "niște", "acest", "această"};
  static const std::set<std::string, std::less<>> pron = {"el", "ea",  "ei", "ele", "eu",
                                                          "tu", "noi", "voi", "se", "își"};
  static const std::set<std::string, std::less<>> adv = {"nu", "foarte", "mai", "azi", "acum"};
  static const std::set<std::string, std::less<>> aux = {"este", "sunt", "a", "au", "fi", "fost", "era"};

  auto cps = text::decode_utf8(form);
  if (cps.empty()) return "X";
  if (std::all_of(cps.begin(), cps.end(), [](char32_t c) { return text::is_punct(c); })) return "PUNCT";
  if (std::all_of(cps.begin(), cps.end(), [](char32_t c) { return text::is_digit(c); })) return "NUM";
  if (text::is_upper(cps.front())) return "PROPN";
  std::string lower = text::to_lower(form);
  if (in(cconj, lower)) return "CCONJ";
  if (in(adp, lower)) return "ADP";
  if (in(det, lower)) return "DET";
  if (in(pron, lower)) return "PRON";
  if (in(adv, lower)) return "ADV";
  if (in(aux, lower)) return "AUX";
  for (std::string_view s : {"ește", "ează", "esc", "ăm", "ați", "are", "ire"})
    if (ends_with(lower, s)) return "VERB";
  for (std::string_view s : {"ului", "lor", "ul", "uri", "ile", "ea"})
    if (ends_with(lower, s)) return "NOUN";
  for (std::string_view s : {"os", "oasă", "ic", "ică", "bil"})
    if (ends_with(lower, s)) return "ADJ";
  return "NOUN";
}

std::string hyphenate(std::string_view form) {
  auto cps = text::decode_utf8(form);
  std::u32string out;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    // V-CV boundary.
    if (i > 0 && i + 1 < cps.size() && !is_vowel(cps[i]) && is_vowel(cps[i - 1]) &&
        is_vowel(cps[i + 1]) && !text::is_punct(cps[i]) && !text::is_digit(cps[i]))
      out.push_back(U'-');
    out.push_back(cps[i]);
  }
  return text::encode_utf8(out);
}

std::string phonetic(std::string_view form) {
  static const std::vector<std::pair<std::u32string, std::u32string>> rules = {
      {U"che", U"ke"}, {U"chi", U"ki"}, {U"ghe", U"ge"}, {U"ghi", U"gi"}, {U"ce", U"tSe"},
      {U"ci", U"tSi"}, {U"ge", U"dZe"}, {U"gi", U"dZi"}, {U"ș", U"S"},   {U"ş", U"S"},
      {U"ț", U"ts"},   {U"ţ", U"ts"},   {U"ă", U"@"},    {U"â", U"1"},   {U"î", U"1"},
      {U"x", U"ks"}};
  auto cps = text::decode_utf8(text::to_lower(form));
  std::u32string out;
  std::size_t i = 0;
  while (i < cps.size()) {
    bool matched = false;
    for (const auto& [from, to] : rules) {
      if (cps.compare(i, from.size(), from) == 0) {
        out += to;
        i += from.size();
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(cps[i++]);
  }
  return text::encode_utf8(out);
}

std::string normalize_text(std::string_view text) {
  auto cps = text::decode_utf8(text);
  for (auto& c : cps) {
    switch (c) {
      case U'ş': c = U'ș'; break;
      case U'Ş': c = U'Ș'; break;
      case U'ţ': c = U'ț'; break;
      case U'Ţ': c = U'Ț'; break;
      default: break;
    }
  }
  return text::encode_utf8(cps);
}

MockWorker::MockWorker(spans::Gazetteer ner, spans::Gazetteer biomedical)
    : ner_(build_matcher(ner)), biomedical_(build_matcher(biomedical)) {}

MockWorker::Matcher MockWorker::build_matcher(const spans::Gazetteer& gazetteer) {
  Matcher m;
  // Entries are ordered by (label, surface); the first label wins a surface.
  for (const auto& [label, surface] : gazetteer.entries) {
    auto forms = text::split_ws(surface);
    if (forms.empty()) continue;
    m.longest = std::max(m.longest, forms.size());
    m.entries.emplace(std::move(forms), label);
  }
  return m;
}

void MockWorker::tag_entities(json& sentences, const Matcher& matcher, const std::string& key) {
  for (auto& s : sentences) {
    auto& tokens = tokens_of(s);
    std::vector<std::string> forms;
    for (const auto& t : tokens) forms.push_back(t.value("form", std::string(conllu::kEmpty)));
    std::vector<std::string> tags(forms.size(), "O");
    std::size_t i = 0;
    while (i < forms.size()) {
      std::size_t matched = 0;
      for (std::size_t n = std::min(matcher.longest, forms.size() - i); n > 0; --n) {
        std::vector<std::string> window(forms.begin() + static_cast<long>(i),
                                        forms.begin() + static_cast<long>(i + n));
        auto it = matcher.entries.find(window);
        if (it != matcher.entries.end()) {
          for (std::size_t k = 0; k < n; ++k) tags[i + k] = it->second;
          matched = n;
          break;
        }
      }
      i += matched ? matched : 1;
    }
    for (std::size_t k = 0; k < tokens.size(); ++k) tokens[k][key] = tags[k];
  }
}

std::set<std::string> MockWorker::supported_operations() {
  std::set<std::string> ops;
  for (const auto& [name, _] : pipeline::Registry::standard().specs()) ops.insert(name);
  return ops;
}

json MockWorker::process(const json& request) {
  if (!request.is_object()) throw InvalidArgument("request must be a JSON object");
  std::string text_value = request.value("text", std::string());
  json sentences = request.value("sentences", json::array());
  if (!sentences.is_array()) throw InvalidArgument("'sentences' must be an array");
  const json operations = request.value("operations", json::array());
  if (!operations.is_array()) throw InvalidArgument("'operations' must be an array");

  for (const auto& op_json : operations) {
    if (!op_json.is_string()) throw InvalidArgument("operation names must be strings");
    const std::string op = op_json.get<std::string>();
    if (op == pipeline::kTextNormalization) {
      text_value = normalize_text(text_value);
    } else if (op == pipeline::kDiacriticRestoration) {
      // Identity: the mock has no model to restore diacritics with.
    } else if (op == pipeline::kSentenceSplitting) {
      sentences = json::array();
      for (const auto& span : split_sentences(text::decode_utf8(text_value)))
        sentences.push_back({{"start_char", span.start}, {"end_char", span.end}, {"tokens", json::array()}});
    } else if (op == pipeline::kTokenization) {
      const auto cps = text::decode_utf8(text_value);
      std::vector<conllu::CharSpan> ranges;
      for (const auto& s : sentences)
        if (s.contains("start_char") && s.contains("end_char"))
          ranges.push_back({s["start_char"].get<std::size_t>(), s["end_char"].get<std::size_t>()});
      if (ranges.empty() && !cps.empty()) ranges.push_back({0, cps.size()});
      json out = json::array();
      for (const auto& range : ranges) {
        json tokens = json::array();
        std::size_t id = 0;
        for (const auto& t : tokenize(cps, range))
          tokens.push_back({{"id", ++id},
                            {"form", text::encode_utf8(cps.substr(t.start, t.end - t.start))},
                            {"start_char", t.start},
                            {"end_char", t.end}});
        if (!tokens.empty())
          out.push_back({{"start_char", range.start}, {"end_char", range.end}, {"tokens", tokens}});
      }
      sentences = std::move(out);
    } else if (op == pipeline::kPosTagging) {
      for (auto& s : sentences)
        for (auto& t : tokens_of(s)) {
          std::string upos = pos_tag(t.value("form", std::string()));
          t["upos"] = upos;
          auto code = xpos_codes().find(upos);
          t["xpos"] = code == xpos_codes().end() ? std::string("X") : code->second;
          t["feats"] = std::string(conllu::kEmpty);
        }
    } else if (op == pipeline::kLemmatization) {
      for (auto& s : sentences)
        for (auto& t : tokens_of(s)) {
          std::string form = t.value("form", std::string());
          std::string upos = t.value("upos", pos_tag(form));
          t["lemma"] = lemma_of(form, upos);
        }
    } else if (op == pipeline::kDependencyParsing) {
      for (auto& s : sentences) {
        auto& tokens = tokens_of(s);
        if (tokens.empty()) continue;
        std::size_t root = tokens.size();
        for (std::size_t i = 0; i < tokens.size() && root == tokens.size(); ++i) {
          std::string upos = tokens[i].value("upos", std::string());
          if (upos == "VERB" || upos == "AUX") root = i;
        }
        for (std::size_t i = 0; i < tokens.size() && root == tokens.size(); ++i)
          if (tokens[i].value("upos", std::string()) != "PUNCT") root = i;
        if (root == tokens.size()) root = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
          if (i == root) {
            tokens[i]["head"] = 0;
            tokens[i]["deprel"] = "root";
          } else {
            tokens[i]["head"] = root + 1;
            tokens[i]["deprel"] = tokens[i].value("upos", std::string()) == "PUNCT" ? "punct" : "dep";
          }
        }
      }
    } else if (op == pipeline::kChunking) {
      static const std::set<std::string> nominal = {"NOUN", "PROPN", "ADJ", "DET", "NUM"};
      const std::string key = conllu::payload_key(conllu::kChunkColumn);
      for (auto& s : sentences) {
        bool inside = false;
        for (auto& t : tokens_of(s)) {
          bool np = nominal.count(t.value("upos", std::string())) > 0;
          t[key] = np ? (inside ? "I-NP" : "B-NP") : "O";
          inside = np;
        }
      }
    } else if (op == pipeline::kNer) {
      tag_entities(sentences, ner_, conllu::payload_key(conllu::kNerColumn));
    } else if (op == pipeline::kBioNer) {
      tag_entities(sentences, biomedical_, conllu::payload_key(conllu::kBioNerColumn));
    } else if (op == pipeline::kHyphenation) {
      const std::string key = conllu::payload_key(conllu::kHyphenationColumn);
      for (auto& s : sentences)
        for (auto& t : tokens_of(s)) t[key] = hyphenate(t.value("form", std::string()));
    } else if (op == pipeline::kPhoneticTranscription) {
      const std::string key = conllu::payload_key(conllu::kPhoneticColumn);
      for (auto& s : sentences)
        for (auto& t : tokens_of(s)) t[key] = phonetic(t.value("form", std::string()));
    } else {
      throw InvalidArgument("unsupported operation '" + op + "'");
    }
  }
  return {{"text", text_value}, {"sentences", sentences}};
}

}  // namespace corpusflow::mock
