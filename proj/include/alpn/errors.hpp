#pragma once

#include <stdexcept>
#include <string>

namespace alpn {

// Error hierarchy shared by the library and the CLI. Each class maps to a
// stable machine-parsable error tag printed by the command-line tool.
class Error : public std::runtime_error {
 public:
  Error(std::string tag, const std::string& what)
      : std::runtime_error(what), tag_(std::move(tag)) {}
  const std::string& tag() const { return tag_; }

 private:
  std::string tag_;
};

// Invalid configuration: bad field values, unknown keys, shape mismatches.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config-invalid", what) {}
};

// Malformed input data (log files, catalog files, checkpoints).
struct DataError : Error {
  explicit DataError(const std::string& what) : Error("data-malformed", what) {}
};

// Filesystem problems: missing files, unwritable outputs.
struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io-error", what) {}
};

// Checkpoint and config disagree on the exercise catalog.
struct CatalogMismatchError : Error {
  explicit CatalogMismatchError(const std::string& what)
      : Error("catalog-mismatch", what) {}
};

// Non-finite numbers where finite ones are required (exploding gradients).
struct NumericsError : Error {
  explicit NumericsError(const std::string& what) : Error("run-failed", what) {}
};

// API misuse: stepping a finished episode, empty minibatches.
struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error("usage", what) {}
};

}  // namespace alpn
