#pragma once

#include <stdexcept>
#include <string>

namespace ubsb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent MarginalConfig. `path()` names the offending entry
/// (e.g. "occupations[3].income") when known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string path = {})
      : Error(message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Dataset file does not match the expected column layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Bad data values: unparsable cells, duplicate ids, future dates, single-class labels.
class DataError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  GenerationError(const std::string& message, std::size_t record_index)
      : Error(message), record_index_(record_index) {}
  std::size_t record_index() const noexcept { return record_index_; }

 private:
  std::size_t record_index_;
};

}  // namespace ubsb
