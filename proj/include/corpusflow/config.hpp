#pragma once

// Service configuration: "key = value" lines, '#' comments.

#include <cstddef>
#include <string>
#include <string_view>

namespace corpusflow {

struct Config {
  std::string listen_address = "127.0.0.1";
  int port = 8080;
  std::string storage_root = "corpusflow-data";
  std::size_t unit_timeout_s = 120;
  std::size_t heartbeat_interval_s = 10;
  std::size_t max_attempts = 3;
  std::size_t dead_after_failures = 3;
  std::size_t local_workers = 4;
  std::size_t default_max_inflight = 4;
  std::string bearer_token;  // sent to workers when set

  // Unknown keys and malformed values are ParseErrors.
  static Config parse(std::string_view content);
  static Config load(const std::string& path);
};

}  // namespace corpusflow
