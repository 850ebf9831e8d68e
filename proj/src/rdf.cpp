#include <cstdio>

#include "corpusflow/error.hpp"
#include "corpusflow/stats.hpp"

namespace corpusflow::stats {

namespace {

std::string percent_encode(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
        c == '.' || c == '_' || c == '~') {
      out += static_cast<char>(c);
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

std::string literal(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::string rdf_property_name(std::string_view column) {
  std::string out;
  for (char c : column) {
    if (c >= 'A' && c <= 'Z')
      out += static_cast<char>(c - 'A' + 'a');
    else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
      out += c;
    else
      out += '_';
  }
  return out;
}

std::string export_rdf(const conllu::Document& doc, const std::vector<std::string>& columns,
                       std::string_view base_uri) {
  std::string base(base_uri);
  while (!base.empty() && base.back() == '/') base.pop_back();

  std::vector<std::pair<std::string, std::size_t>> props;
  for (const auto& c : columns) {
    if (c == conllu::kForm) continue;
    auto idx = doc.schema.index_of(c);
    if (!idx) throw InvalidArgument("column '" + c + "' not in schema");
    props.emplace_back(rdf_property_name(c), *idx);
  }

  std::vector<const conllu::Token*> tokens;
  if (!columns.empty()) {
    for (const auto& s : doc.sentences)
      for (const auto& t : s.tokens) {
        if (!t.is_word()) continue;
        if (!t.offsets)
          throw InvalidArgument("token " + t.id() + " ('" + t.form() + "') has no character offsets");
        tokens.push_back(&t);
      }
  }

  const std::string doc_iri = base + "/" + percent_encode(doc.doc_id);
  auto token_iri = [&](const conllu::Token& t) {
    return "<" + doc_iri + "#char=" + std::to_string(t.offsets->start) + "," +
           std::to_string(t.offsets->end) + ">";
  };

  std::string out;
  out += "@prefix cf: <" + base + "/vocab#> .\n";
  out += "@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .\n\n";
  out += "<" + doc_iri + "> a cf:Document";
  if (!columns.empty()) {
    out += " ;\n    cf:tokens (";
    for (const auto* t : tokens) out += "\n        " + token_iri(*t);
    out += tokens.empty() ? ")" : "\n    )";
  }
  out += " .\n";
  for (const auto* t : tokens) {
    out += "\n" + token_iri(*t) + " cf:form " + literal(t->form());
    for (const auto& [name, idx] : props) {
      const std::string& v = t->values[idx];
      if (v == conllu::kEmpty) continue;
      out += " ;\n    cf:" + name + " " + literal(v);
    }
    out += " .\n";
  }
  return out;
}

}  // namespace corpusflow::stats
