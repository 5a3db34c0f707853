#pragma once

#include <stdexcept>
#include <string>

namespace eegf0 {

// Base for every error raised by the library. Precondition violations on
// plain arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV, config, shapes).
class DataError : public Error {
 public:
  using Error::Error;
};

// Untrained model, corrupt model file.
class ModelError : public Error {
 public:
  using Error::Error;
};

class FormatVersionError : public ModelError {
 public:
  using ModelError::ModelError;
};

// Non-finite state during forward simulation.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Wraps a failure inside one pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace eegf0
