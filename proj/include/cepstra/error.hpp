#pragma once

#include <stdexcept>
#include <string>

namespace cepstra {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  validation = 2,  // domain, configuration and training-precondition errors
  parse = 3,       // malformed or unreadable input files
  numerical = 4,   // a computation produced a non-finite or singular result
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Precondition on an operation's arguments was violated.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Parameters are individually valid but incompatible with each other or the data.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::parse, what) {}
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(ErrorKind::parse, file + ":" + std::to_string(line) + ": " + what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

}  // namespace cepstra
