#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thumbtrak {

enum class ErrorKind {
  Config,    // invalid geometry or hand configuration
  Input,     // caller passed values outside an operation's domain
  Training,  // a classifier could not be fitted
  Dimension, // feature dimension does not match a model
  Parse,     // malformed document or dataset line
  Version,   // document written by an unknown format version
  Io,        // file or socket could not be read or written
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Parse error that remembers the 1-based line it came from (0 when unknown).
class ParseError : public Error {
public:
  ParseError(const std::string &message, std::size_t line = 0)
      : Error(ErrorKind::Parse, line ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace thumbtrak
