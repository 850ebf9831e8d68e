#include "corpusflow/worker_client.hpp"

#include <charconv>

#include <httplib.h>

#include "corpusflow/error.hpp"

namespace corpusflow::workers {

namespace {

httplib::Client make_client(const Endpoint& ep, std::chrono::milliseconds timeout,
                            const std::string& token) {
  httplib::Client client(ep.host, ep.port);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!token.empty()) client.set_bearer_token_auth(token);
  return client;
}

}  // namespace

std::string Endpoint::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

Endpoint parse_endpoint(std::string_view url) {
  Endpoint ep;
  auto sep = url.find("://");
  if (sep == std::string_view::npos) throw InvalidArgument("endpoint lacks a scheme: " + std::string(url));
  ep.scheme = std::string(url.substr(0, sep));
  std::string rest(url.substr(sep + 3));
  if (ep.scheme == "mock") {
    if (rest.empty() || rest.find_first_of("/ ") != std::string::npos)
      throw InvalidArgument("mock endpoint needs a name: " + std::string(url));
    ep.host = rest;
    ep.port = 0;
    return ep;
  }
  if (ep.scheme != "http") throw InvalidArgument("unsupported endpoint scheme: " + ep.scheme);
  auto slash = rest.find('/');
  std::string_view authority = std::string_view(rest).substr(0, slash);
  if (slash != std::string::npos) {
    std::string_view path = std::string_view(rest).substr(slash);
    while (!path.empty() && path.back() == '/') path.remove_suffix(1);
    ep.base_path = std::string(path);
  }
  auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    std::string_view port = authority.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), ep.port);
    if (port.empty() || ec != std::errc() || ptr != port.data() + port.size() || ep.port <= 0 ||
        ep.port > 65535)
      throw InvalidArgument("invalid port in endpoint: " + std::string(url));
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw InvalidArgument("endpoint lacks a host: " + std::string(url));
  ep.host = std::string(authority);
  return ep;
}

HttpWorker::HttpWorker(std::string_view endpoint, std::chrono::milliseconds timeout,
                       std::string bearer_token)
    : endpoint_(parse_endpoint(endpoint)), timeout_(timeout), bearer_token_(std::move(bearer_token)) {
  if (endpoint_.scheme != "http") throw InvalidArgument("HttpWorker needs an http:// endpoint");
}

nlohmann::json HttpWorker::process(const nlohmann::json& request) {
  auto client = make_client(endpoint_, timeout_, bearer_token_);
  auto res = client.Post(endpoint_.base_path + "/process", request.dump(), "application/json");
  if (!res) throw Error("worker " + endpoint_.origin() + " unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error("worker " + endpoint_.origin() + " answered " + std::to_string(res->status) + ": " +
                res->body.substr(0, 200));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error("worker " + endpoint_.origin() + " sent invalid JSON: " + e.what());
  }
}

bool HttpWorker::healthy(std::chrono::milliseconds timeout) const {
  auto client = make_client(endpoint_, timeout, bearer_token_);
  auto res = client.Get(endpoint_.base_path + "/health");
  return res && res->status == 200;
}

}  // namespace corpusflow::workers
