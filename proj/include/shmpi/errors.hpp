#pragma once

#include <stdexcept>
#include <string>

namespace shmpi {

/// Invalid parameters or malformed configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required input file or pipeline artifact does not exist.
class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A persisted artifact was produced under a different configuration.
class HashMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An estimated resource requirement exceeds the configured cap.
class ResourceCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The operation is not defined for the given field topology or input.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coefficient/grid file syntax error, carrying the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace shmpi
