#include "wxscale/error.hpp"

namespace wxscale {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::UnknownShape: return "UnknownShape";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateX: return "DegenerateX";
    case ErrorCode::NoValidMinima: return "NoValidMinima";
    case ErrorCode::UnregisteredLaw: return "UnregisteredLaw";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MonotonicityViolation: return "MonotonicityViolation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_insufficient_data(ErrorCode code) {
  return code == ErrorCode::TooFewPoints || code == ErrorCode::DegenerateX ||
         code == ErrorCode::NoValidMinima;
}

}  // namespace wxscale
