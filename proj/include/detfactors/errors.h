#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace detfactors {

// Every library error derives from Error. The CLI maps the categories below to
// process exit codes: usage/config -> 1, data/validation -> 2, external -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed interchange input. line() is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A record that parsed but violates a type invariant.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& record, const std::string& field, const std::string& what)
      : Error("invalid " + field + " in " + record + ": " + what), record_(record), field_(field) {}
  const std::string& record() const { return record_; }
  const std::string& field() const { return field_; }

 private:
  std::string record_;
  std::string field_;
};

// A record refers to something that does not exist (e.g. unknown frame_id).
class ReferentialError : public Error {
 public:
  using Error::Error;
};

// Caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A mathematically undefined input (e.g. an object at the ego origin).
class DomainError : public Error {
 public:
  using Error::Error;
};

// An estimator cannot run on the data it was given.
class EstimatorError : public Error {
 public:
  using Error::Error;
};

// Cross-validation folds cannot all contain both classes.
class StratificationError : public EstimatorError {
 public:
  using EstimatorError::EstimatorError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// External weather service could not deliver a record.
class WeatherUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace detfactors
