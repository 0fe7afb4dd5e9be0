#pragma once

#include <stdexcept>
#include <string>

namespace advmc {

enum class Errc {
  RowSumViolation,
  EntryOutOfRange,
  BadInit,
  BadLabel,
  PolicyActionDisabled,
  InfeasiblePerturbation,
  ParseError,
  SyntaxError,
  UnknownAtom,
  StateIndexOutOfRange,
  SingularSystem,
  EmptyThreat,
  ProjectionFailed,
  DegreeOverflow,
  DivisionByZeroPolynomial,
  MissingVariable,
  DenominatorNearZero,
  UnsupportedForSymbolic,
  TooManyVariables,
  ParameterOutOfRange,
  Timeout,
};

const char* errc_name(Errc code);

/// Domain error carrying a machine-checkable code plus a human message
/// naming the first offending element.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace advmc
