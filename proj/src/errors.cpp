#include "advmc/errors.hpp"

namespace advmc {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::RowSumViolation: return "RowSumViolation";
    case Errc::EntryOutOfRange: return "EntryOutOfRange";
    case Errc::BadInit: return "BadInit";
    case Errc::BadLabel: return "BadLabel";
    case Errc::PolicyActionDisabled: return "PolicyActionDisabled";
    case Errc::InfeasiblePerturbation: return "InfeasiblePerturbation";
    case Errc::ParseError: return "ParseError";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnknownAtom: return "UnknownAtom";
    case Errc::StateIndexOutOfRange: return "StateIndexOutOfRange";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::EmptyThreat: return "EmptyThreat";
    case Errc::ProjectionFailed: return "ProjectionFailed";
    case Errc::DegreeOverflow: return "DegreeOverflow";
    case Errc::DivisionByZeroPolynomial: return "DivisionByZeroPolynomial";
    case Errc::MissingVariable: return "MissingVariable";
    case Errc::DenominatorNearZero: return "DenominatorNearZero";
    case Errc::UnsupportedForSymbolic: return "UnsupportedForSymbolic";
    case Errc::TooManyVariables: return "TooManyVariables";
    case Errc::ParameterOutOfRange: return "ParameterOutOfRange";
    case Errc::Timeout: return "Timeout";
  }
  return "UnknownError";
}

}  // namespace advmc
