#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace corpusflow {

// Base of every error thrown by the library. The subclasses map one-to-one
// onto HTTP status codes in the API layer (404, 422, 409).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class Conflict : public Error {
 public:
  using Error::Error;
};

// Malformed input file. line() is 1-based, 0 when not tied to a line.
class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& message, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace corpusflow
