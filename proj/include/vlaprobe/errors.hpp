#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vlaprobe {

// Base of every error raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input could not be parsed (malformed JSON, bad line format, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Parsed input violates one or more documented invariants. `violations`
// lists every failed check, each prefixed by the offending field path.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(Join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string Join(const std::vector<std::string>& v) {
    std::string out = "validation failed:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

// Precondition of an operation does not hold (unknown id, out-of-range
// time, empty input, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Wire-protocol violation; `field` names the first failing field.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string field, const std::string& what)
      : Error("protocol violation at '" + field + "': " + what),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace vlaprobe
