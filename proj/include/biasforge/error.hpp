#pragma once

#include <stdexcept>
#include <string>

namespace biasforge {

enum class ErrorKind {
  Config,          // malformed or inconsistent configuration / parameters
  Data,            // malformed input records
  Io,              // filesystem failures
  Singularity,     // division by a (near) zero slope, variance or noise sd
  Domain,          // parameter outside its admissible domain
  Numerical,       // non-finite intermediate result
  UndefinedMetric, // metric has no support (e.g. no repaid records for a gender)
  Degenerate,      // training data unusable (single class, empty pool)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error kind: 2 config/data, 3 I/O, 5 degenerate data.
int exit_code_for(ErrorKind kind) noexcept;

const char* to_string(ErrorKind kind) noexcept;

}  // namespace biasforge
