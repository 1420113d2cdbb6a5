#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ics {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value (bad hyperparameter, empty corpus, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Pooling over a sequence with no unmasked positions.
class EmptySequenceError : public Error {
 public:
  using Error::Error;
};

// Backward requested on a cleared or foreign tape.
class TapeError : public Error {
 public:
  using Error::Error;
};

class MissingGradientError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Aspect attributes that do not conform to the declared schema.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& reason)
      : Error("aspect field '" + field + "': " + reason), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class UnavailableError : public Error {
 public:
  using Error::Error;
};

}  // namespace ics
