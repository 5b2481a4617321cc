#pragma once

#include <stdexcept>
#include <string>

namespace mcf {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Instance file rejected; carries the 1-based line number when known.
struct ParseError : Error {
  int line = 0;
  ParseError(int line_, const std::string& what)
      : Error(line_ > 0 ? "line " + std::to_string(line_) + ": " + what : what),
        line(line_) {}
};

// Vector/matrix sizes do not match the operation's contract.
struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error(what) {}
};

// Numerical contract violated: non-PD block, asymmetric input,
// iterative solver hit its cap, singular reduced system, ...
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(what) {}
};

// Problem size exceeds a configured desk-scale budget (oracles, count tables).
struct BudgetError : Error {
  explicit BudgetError(const std::string& what) : Error(what) {}
};

}  // namespace mcf
