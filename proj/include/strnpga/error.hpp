#pragma once

#include <stdexcept>
#include <string>

namespace strnpga {

/// Broad failure categories. The CLI maps these onto exit codes.
enum class ErrorKind {
  Argument,           // caller passed an out-of-range parameter
  Format,             // malformed input file (ragged rows, missing header)
  Parse,              // a cell could not be parsed as a number
  Dimension,          // shapes do not satisfy an operation's precondition
  Numeric,            // non-finite data, underflow, breakdown
  Infeasible,         // empty feasible set or unreachable return target
  Degenerate,         // zero spectrum or similar degenerate input
  ProjectionFailure,  // fallback projection did not converge
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

/// Throws Error(kind, message) when `ok` is false.
inline void require(bool ok, ErrorKind kind, const std::string& message) {
  if (!ok) throw Error(kind, message);
}

}  // namespace strnpga
