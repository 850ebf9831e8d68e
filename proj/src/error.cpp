#include "corpusflow/error.hpp"

namespace corpusflow {

namespace {
std::string with_line(const std::string& message, std::size_t line) {
  if (line == 0) return message;
  return "line " + std::to_string(line) + ": " + message;
}
}  // namespace

ParseError::ParseError(const std::string& message, std::size_t line)
    : InvalidArgument(with_line(message, line)), line_(line) {}

}  // namespace corpusflow
