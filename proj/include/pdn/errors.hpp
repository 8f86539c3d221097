#pragma once

#include <stdexcept>
#include <string>

namespace pdn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with user-supplied configuration or inputs. `path` names the
// offending field (dotted document path) or file.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InvalidParam : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DirectoryTooSmall : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnknownKnob : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class MissingLog : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnknownEntity : public Error {
 public:
  using Error::Error;
};

class UnknownTarget : public Error {
 public:
  using Error::Error;
};

// A simulator invariant broke. These indicate bugs, never bad input.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class AccessDenied : public InvariantViolation {
 public:
  using InvariantViolation::InvariantViolation;
};

class Infeasible : public InvariantViolation {
 public:
  using InvariantViolation::InvariantViolation;
};

class TimeTravel : public InvariantViolation {
 public:
  using InvariantViolation::InvariantViolation;
};

}  // namespace pdn
