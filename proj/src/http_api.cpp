#include "corpusflow/http_api.hpp"

#include <httplib.h>

#include "corpusflow/error.hpp"
#include "corpusflow/text.hpp"

using nlohmann::json;

namespace corpusflow::http {

namespace {

void send_json(httplib::Response& res, int status, json body) {
  body["api_version"] = kApiVersion;
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

// Maps the exception hierarchy onto status codes.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const json::exception& e) {
      send_error(res, 400, std::string("invalid JSON: ") + e.what());
    } catch (const NotFound& e) {
      send_error(res, 404, e.what());
    } catch (const Conflict& e) {
      send_error(res, 409, e.what());
    } catch (const InvalidArgument& e) {
      send_error(res, 422, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  auto body = json::parse(req.body);
  if (!body.is_object()) throw InvalidArgument("request body must be a JSON object");
  return body;
}

std::string param_string(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_float() || v.is_boolean()) return v.dump();
  if (v.is_array()) {
    std::vector<std::string> parts;
    for (const auto& item : v) {
      if (!item.is_string()) throw InvalidArgument("parameter '" + key + "' must list strings");
      parts.push_back(item.get<std::string>());
    }
    return text::join(parts, ",");
  }
  throw InvalidArgument("parameter '" + key + "' has an unsupported type");
}

}  // namespace

HttpServer::HttpServer() : server_(std::make_unique<httplib::Server>()) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::start_background() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

ApiServer::ApiServer(Service& service) : service_(service) {
  auto& s = server();

  s.Post("/corpora", guarded([this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("archive")) throw InvalidArgument("multipart field 'archive' is required");
    std::string corpus_id;
    if (req.has_file("corpus_id")) corpus_id = req.get_file_value("corpus_id").content;
    else if (req.has_param("corpus_id")) corpus_id = req.get_param_value("corpus_id");
    if (corpus_id.empty()) throw InvalidArgument("corpus_id is required");
    auto task_id = service_.upload_archive(corpus_id, req.get_file_value("archive").content);
    json body = {{"corpus_id", corpus_id}, {"task_id", task_id}};
    if (req.get_param_value("wait") == "true") body["task"] = service_.wait(task_id).to_json();
    send_json(res, 201, body);
  }));

  s.Get(R"(/corpora/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, service_.store().summary(req.matches[1]).to_json());
  }));

  s.Get(R"(/corpora/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::vector<std::string> layers;
    for (const auto& l : text::split(req.get_param_value("layers"), ','))
      if (!text::trim(l).empty()) layers.emplace_back(text::trim(l));
    auto result = service_.store().export_archive(req.matches[1], layers);
    res.set_header("X-Export-Report", result.to_json().dump());
    res.set_header("Content-Disposition", "attachment; filename=\"" + std::string(req.matches[1]) + ".zip\"");
    res.set_content(result.archive, "application/zip");
  }));

  s.Get(R"(/corpora/([^/]+)/artifacts/(.+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    res.set_content(service_.store().get_artifact(req.matches[1], req.matches[2]), "application/octet-stream");
  }));

  s.Post("/tasks", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    std::map<std::string, std::string> params;
    if (body.contains("params")) {
      if (!body["params"].is_object()) throw InvalidArgument("params must be an object");
      for (const auto& [k, v] : body["params"].items()) params[k] = param_string(k, v);
    }
    auto id = service_.submit(body.at("kind").get<std::string>(), body.at("corpus_id").get<std::string>(),
                              std::move(params));
    send_json(res, 201, service_.engine().task(id).to_json());
  }));

  s.Get("/tasks", guarded([this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& t : service_.engine().tasks()) list.push_back(t.to_json());
    send_json(res, 200, {{"tasks", list}});
  }));

  s.Get(R"(/tasks/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, service_.engine().task(req.matches[1]).to_json());
  }));

  s.Post("/workers", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    std::optional<std::size_t> max_inflight;
    if (body.contains("max_inflight")) max_inflight = body["max_inflight"].get<std::size_t>();
    auto id = service_.register_worker(body.at("endpoint").get<std::string>(),
                                       body.at("operations").get<std::set<std::string>>(), max_inflight);
    send_json(res, 201, service_.engine().worker(id).to_json());
  }));

  s.Get("/workers", guarded([this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& w : service_.engine().workers()) list.push_back(w.to_json());
    send_json(res, 200, {{"workers", list}});
  }));

  s.Delete(R"(/workers/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    service_.deregister_worker(req.matches[1]);
    send_json(res, 200, {{"node_id", std::string(req.matches[1])}, {"deregistered", true}});
  }));

  s.Get("/components", guarded([this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& c : service_.components()) list.push_back(c.to_json());
    send_json(res, 200, {{"components", list}});
  }));

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "no such endpoint");
  });
}

MockWorkerServer::MockWorkerServer(mock::MockWorker worker) : worker_(std::move(worker)) {
  auto& s = server();
  s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  s.Post("/process", guarded([this](const httplib::Request& req, httplib::Response& res) {
    res.set_content(worker_.process(parse_body(req)).dump(), "application/json");
  }));
}

}  // namespace corpusflow::http
