#pragma once

#include <stdexcept>
#include <string>

namespace posegen {

// Exception hierarchy. The CLI maps each family onto an exit code:
// ConfigError -> 2, DataError and IoError -> 3, everything else -> 4.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "runtime_error"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data_error"; }
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
  const char* kind() const noexcept override { return "validation_error"; }
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }
  const char* kind() const noexcept override { return "io_error"; }

 private:
  std::string path_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape_error"; }
};

// Raised when a forward or backward pass produces NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric_error"; }
};

}  // namespace posegen
