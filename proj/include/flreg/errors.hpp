#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace flreg {

// Base error carrying a stable kind tag for machine-readable reporting.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what)
      : Error("invalid-argument", what) {}
};

struct UnsupportedOrder : Error {
  explicit UnsupportedOrder(const std::string& what)
      : Error("unsupported-order", what) {}
};

struct UnderdeterminedBasis : Error {
  explicit UnderdeterminedBasis(const std::string& what)
      : Error("under-determined-basis", what) {}
};

// Factorization refused or failed; carries the offending pivot/condition value.
struct ConditioningError : Error {
  ConditioningError(const std::string& what, double diagnostic)
      : Error("conditioning", what), diagnostic(diagnostic) {}
  double diagnostic;
};

struct DegenerateSmoother : Error {
  explicit DegenerateSmoother(const std::string& what)
      : Error("degenerate-smoother", what) {}
};

struct NoValidRho : Error {
  explicit NoValidRho(const std::string& what) : Error("no-valid-rho", what) {}
};

struct InsufficientGrid : Error {
  explicit InsufficientGrid(const std::string& what)
      : Error("insufficient-grid", what) {}
};

struct GridTooCoarse : Error {
  explicit GridTooCoarse(const std::string& what)
      : Error("grid-too-coarse", what) {}
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& what) : Error("invalid-input", what) {}
};

struct ParseError : Error {
  ParseError(const std::string& what, long line)
      : Error("parse", what + " (line " + std::to_string(line) + ")"),
        line(line) {}
  long line;
};

struct UnsupportedVersion : Error {
  explicit UnsupportedVersion(const std::string& what)
      : Error("unsupported-version", what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace flreg
