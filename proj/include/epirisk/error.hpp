#pragma once

#include <stdexcept>
#include <string>

namespace epirisk {

/// Coarse failure category. The CLI maps these onto process exit codes.
enum class ErrorKind {
  config,     ///< invalid configuration or precondition on a config value
  data,       ///< malformed or inconsistent input data
  shape,      ///< tensor shape mismatch
  graph,      ///< graph index out of range / inconsistent graph
  numerical,  ///< non-finite values, degenerate fits
  io,         ///< missing or unreadable files
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  /// `field` names the offending configuration entry.
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorKind::config, field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::shape, what) {}
};

class GraphError : public Error {
 public:
  explicit GraphError(const std::string& what) : Error(ErrorKind::graph, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error(ErrorKind::io, path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace epirisk
