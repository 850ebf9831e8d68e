#include "corpusflow/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "corpusflow/error.hpp"
#include "corpusflow/text.hpp"

namespace corpusflow {

namespace {

std::size_t parse_count(std::string_view value, std::string_view key, std::size_t line, std::size_t min) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size() || v < min)
    throw ParseError(std::string(key) + " must be an integer >= " + std::to_string(min), line);
  return v;
}

}  // namespace

Config Config::parse(std::string_view content) {
  Config c;
  std::size_t lineno = 0;
  for (const auto& raw : text::split(content, '\n')) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", lineno);
    std::string key(text::trim(line.substr(0, eq)));
    std::string_view value = text::trim(line.substr(eq + 1));
    if (key == "listen_address") c.listen_address = value;
    else if (key == "port") c.port = static_cast<int>(parse_count(value, key, lineno, 0));
    else if (key == "storage_root") c.storage_root = value;
    else if (key == "unit_timeout_s") c.unit_timeout_s = parse_count(value, key, lineno, 1);
    else if (key == "heartbeat_interval_s") c.heartbeat_interval_s = parse_count(value, key, lineno, 1);
    else if (key == "max_attempts") c.max_attempts = parse_count(value, key, lineno, 1);
    else if (key == "dead_after_failures") c.dead_after_failures = parse_count(value, key, lineno, 1);
    else if (key == "local_workers") c.local_workers = parse_count(value, key, lineno, 1);
    else if (key == "default_max_inflight") c.default_max_inflight = parse_count(value, key, lineno, 1);
    else if (key == "bearer_token") c.bearer_token = value;
    else throw ParseError("unknown key: " + key, lineno);
  }
  if (c.port > 65535) throw ParseError("port out of range");
  if (c.storage_root.empty()) throw ParseError("storage_root must not be empty");
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace corpusflow
