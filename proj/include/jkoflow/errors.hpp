#pragma once

#include <stdexcept>
#include <string>

namespace jkoflow {

// Base class for all solver/contract violations raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroMass : Error {
  explicit ZeroMass(const std::string& what = "field has nonpositive total mass") : Error(what) {}
};

struct GridMismatch : Error {
  explicit GridMismatch(const std::string& what = "fields live on different grids") : Error(what) {}
};

struct BadExponent : Error {
  explicit BadExponent(const std::string& what = "exponent must be >= 1") : Error(what) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& what = "operation not defined for this grid dimension")
      : Error(what) {}
};

struct BadParameter : Error {
  explicit BadParameter(const std::string& what) : Error(what) {}
};

struct NoConvergence : Error {
  double last_violation = 0.0;
  int iterations = 0;
  NoConvergence(const std::string& what, double violation, int iters)
      : Error(what), last_violation(violation), iterations(iters) {}
};

struct NumericalOverflow : Error {
  explicit NumericalOverflow(const std::string& what = "numerical overflow") : Error(what) {}
};

struct NonPositiveDensity : Error {
  explicit NonPositiveDensity(const std::string& what = "density must be positive") : Error(what) {}
};

struct GridTooLarge : Error {
  explicit GridTooLarge(const std::string& what = "grid exceeds the oracle size guard") : Error(what) {}
};

struct WrongModelClass : Error {
  explicit WrongModelClass(const std::string& what = "check does not apply to this functional")
      : Error(what) {}
};

struct FunctionalUnbounded : Error {
  explicit FunctionalUnbounded(const std::string& what = "objective decreases without bound")
      : Error(what) {}
};

struct ParseError : Error {
  int line = 0;
  int column = 0;
  ParseError(const std::string& what, int line_, int col_) : Error(what), line(line_), column(col_) {}
};

}  // namespace jkoflow
