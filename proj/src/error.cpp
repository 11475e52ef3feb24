#include "biasforge/error.hpp"

namespace biasforge {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return 3;
    case ErrorKind::Degenerate: return 5;
    default: return 2;
  }
}

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Data: return "data";
    case ErrorKind::Io: return "io";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::Degenerate: return "degenerate";
  }
  return "unknown";
}

}  // namespace biasforge
