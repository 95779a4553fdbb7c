#include "strnpga/error.hpp"

namespace strnpga {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Format: return "format";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::ProjectionFailure: return "projection_failure";
  }
  return "unknown";
}

}  // namespace strnpga
