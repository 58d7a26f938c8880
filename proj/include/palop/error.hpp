#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace palop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Syntax and semantic errors found while reading PDDL text.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " +
              message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class PreconditionViolated : public Error {
 public:
  PreconditionViolated(const std::string& action, const std::string& literal)
      : Error("precondition of " + action + " violated: " + literal),
        literal_(literal) {}

  const std::string& literal() const { return literal_; }

 private:
  std::string literal_;
};

class UnboundVariable : public Error {
 public:
  using Error::Error;
};

class ExtensionError : public Error {
 public:
  using Error::Error;
};

class SearchLimitExceeded : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

class ClassifierError : public Error {
 public:
  using Error::Error;
};

}  // namespace palop
