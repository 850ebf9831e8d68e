#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "corpusflow/classifier.hpp"
#include "corpusflow/conllu.hpp"
#include "corpusflow/error.hpp"
#include "corpusflow/geonames.hpp"
#include "corpusflow/pipeline.hpp"
#include "corpusflow/service.hpp"
#include "corpusflow/span_annotation.hpp"
#include "corpusflow/stats.hpp"

namespace py = pybind11;
using namespace corpusflow;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<std::vector<std::vector<std::string>>> rows(const conllu::Document& doc) {
  std::vector<std::vector<std::vector<std::string>>> out;
  for (const auto& s : doc.sentences) {
    auto& sentence = out.emplace_back();
    for (const auto& t : s.tokens) sentence.push_back(t.values);
  }
  return out;
}

std::vector<spans::StandoffSpan> to_spans(const std::vector<std::tuple<std::size_t, std::size_t, std::string>>& in) {
  std::vector<spans::StandoffSpan> out;
  for (const auto& [s, e, l] : in) out.push_back({s, e, l});
  return out;
}

}  // namespace

PYBIND11_MODULE(_corpusflow, m) {
  m.doc() = "corpusflow native core";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<NotFound>(m, "NotFound", base.ptr());
  auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<Conflict>(m, "Conflict", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", invalid.ptr());

  py::class_<conllu::Document>(m, "Document")
      .def_readwrite("doc_id", &conllu::Document::doc_id)
      .def_readwrite("raw_text", &conllu::Document::raw_text)
      .def_readwrite("metadata", &conllu::Document::metadata)
      .def_property_readonly("columns", [](const conllu::Document& d) { return d.schema.columns(); })
      .def_property_readonly("rows", &rows)
      .def_property_readonly("word_count", &conllu::Document::word_count)
      .def("column_values",
           [](const conllu::Document& d, const std::string& name) {
             std::size_t c = d.column(name);
             std::vector<std::vector<std::string>> out;
             for (const auto& s : d.sentences) {
               auto& col = out.emplace_back();
               for (const auto& t : s.tokens) col.push_back(t.values[c]);
             }
             return out;
           })
      .def("serialize", &conllu::serialize_document, py::arg("with_header") = true)
      .def("__eq__", [](const conllu::Document& a, const conllu::Document& b) { return conllu::same_annotation(a, b); });

  m.def("parse_conllu", [](const std::string& text) { return conllu::parse_document(std::string_view(text)); },
        py::arg("text"));
  m.def("io_to_iob", &spans::io_to_iob, py::arg("tags"));
  m.def("spans_to_iob",
        [](const conllu::Document& doc, const std::vector<std::tuple<std::size_t, std::size_t, std::string>>& s,
           const std::string& column) { return spans::spans_to_iob(doc, to_spans(s), column); },
        py::arg("doc"), py::arg("spans"), py::arg("column") = std::string(conllu::kNerColumn));
  m.def("anonymize",
        [](const conllu::Document& doc, const std::set<std::string>& labels, const std::string& column) {
          auto r = spans::anonymize_document(doc, column, labels);
          return py::make_tuple(r.document, r.mapping);
        },
        py::arg("doc"), py::arg("labels"), py::arg("column") = std::string(conllu::kNerColumn));
  m.def("resolve_operations",
        [](const std::vector<std::string>& ops) { return pipeline::resolve_operations({ops.begin(), ops.end()}); },
        py::arg("operations"));

  py::class_<geonames::GeonamesIndex>(m, "GeonamesIndex")
      .def_static("from_extract", &geonames::build_index_from_string, py::arg("extract"))
      .def("lookup", [](const geonames::GeonamesIndex& i, const std::string& name) { return i.lookup(name); })
      .def_property_readonly("name_count", &geonames::GeonamesIndex::name_count)
      .def_property_readonly("warnings", &geonames::GeonamesIndex::warnings);
  m.def("link_geonames",
        [](const conllu::Document& doc, const geonames::GeonamesIndex& index, const std::string& ner_column) {
          auto r = geonames::link_document(doc, ner_column, index);
          py::dict s;
          s["expressions"] = r.stats.expressions;
          s["linked"] = r.stats.linked;
          s["unmatched"] = r.stats.unmatched;
          s["ambiguous"] = r.stats.ambiguous;
          return py::make_tuple(r.document, s);
        },
        py::arg("doc"), py::arg("index"), py::arg("ner_column") = std::string(conllu::kNerColumn));

  py::class_<classify::LinearModel>(m, "LinearModel")
      .def_static("load", &classify::load_model, py::arg("path"))
      .def_readonly("labels", &classify::LinearModel::labels)
      .def("top_k", [](const classify::LinearModel& model, const std::vector<std::string>& tokens,
                       std::size_t k) { return classify::classify_topk(tokens, model, k); },
           py::arg("tokens"), py::arg("k") = classify::kDefaultTopK);
  m.def("evaluate_labels",
        [](const classify::LabelSets& predicted, const classify::LabelSets& gold) {
          return to_python(classify::evaluate(predicted, gold).to_json());
        },
        py::arg("predicted"), py::arg("gold"));

  m.def("stats_csv",
        [](const std::vector<conllu::Document>& docs, std::optional<std::vector<std::string>> columns) {
          return stats::stats_to_csv(stats::compute_stats(docs, columns));
        },
        py::arg("docs"), py::arg("columns") = py::none());

  py::class_<Service>(m, "Service")
      .def(py::init([](const std::string& storage_root, std::size_t local_workers) {
             ServiceOptions o;
             o.config.storage_root = storage_root;
             o.config.local_workers = local_workers;
             auto s = std::make_unique<Service>(o);
             s->start();
             return s;
           }),
           py::arg("storage_root"), py::arg("local_workers") = 4)
      .def("upload_archive",
           [](Service& s, const std::string& corpus, const py::bytes& data) {
             return s.upload_archive(corpus, std::string(data));
           })
      .def("submit", [](Service& s, const std::string& kind, const std::string& corpus,
                        const std::map<std::string, std::string>& params) { return s.submit(kind, corpus, params); },
           py::arg("kind"), py::arg("corpus_id"), py::arg("params") = std::map<std::string, std::string>{})
      .def("wait",
           [](Service& s, const std::string& task_id, double timeout_s) {
             tasks::Task t;
             {
               py::gil_scoped_release release;
               t = s.wait(task_id, std::chrono::milliseconds(static_cast<long>(timeout_s * 1000)));
             }
             return to_python(t.to_json());
           },
           py::arg("task_id"), py::arg("timeout") = 600.0)
      .def("register_worker",
           [](Service& s, const std::string& endpoint, const std::set<std::string>& ops, std::size_t max_inflight) {
             return s.register_worker(endpoint, ops, max_inflight);
           },
           py::arg("endpoint"), py::arg("operations"), py::arg("max_inflight") = 4)
      .def("corpus", [](Service& s, const std::string& id) { return to_python(s.store().summary(id).to_json()); })
      .def("documents", [](Service& s, const std::string& id) { return s.store().list_documents(id); })
      .def("layer", [](Service& s, const std::string& corpus, const std::string& doc, const std::string& layer) {
        return s.store().load_layer(corpus, doc, layer);
      })
      .def("artifact", [](Service& s, const std::string& corpus, const std::string& name) {
        return py::bytes(s.store().get_artifact(corpus, name));
      })
      .def("export", [](Service& s, const std::string& corpus, const std::vector<std::string>& layers) {
        return py::bytes(s.store().export_archive(corpus, layers).archive);
      })
      .def("shutdown", [](Service& s) {
        py::gil_scoped_release release;
        s.shutdown();
      });
}
