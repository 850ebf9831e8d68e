#pragma once

// Clients for annotation workers: HTTP workers speaking the wire protocol
// ("GET /health", "POST /process"), and endpoint parsing.

#include <chrono>
#include <string>
#include <string_view>

#include "corpusflow/pipeline.hpp"

namespace corpusflow::workers {

// http://host[:port][/base]  or  mock://<name> (in-process mock worker).
struct Endpoint {
  std::string scheme;
  std::string host;
  int port = 80;
  std::string base_path;  // no trailing slash

  std::string origin() const;  // scheme://host:port
};

// Throws InvalidArgument for anything else.
Endpoint parse_endpoint(std::string_view url);

class HttpWorker : public pipeline::Worker {
 public:
  HttpWorker(std::string_view endpoint, std::chrono::milliseconds timeout,
             std::string bearer_token = {});

  nlohmann::json process(const nlohmann::json& request) override;
  bool healthy(std::chrono::milliseconds timeout = std::chrono::seconds(2)) const;

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  std::string bearer_token_;
};

}  // namespace corpusflow::workers
