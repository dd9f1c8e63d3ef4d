#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wxscale {

enum class ErrorCode {
  InvalidShape,
  InvalidConfig,
  InvalidGrid,
  InvalidInput,
  Overflow,
  UnknownShape,
  ShapeMismatch,
  NonFiniteInput,
  UnknownVariable,
  EmptyEnsemble,
  TooFewPoints,
  DegenerateX,
  NoValidMinima,
  UnregisteredLaw,
  ParseError,
  MonotonicityViolation,
  Io,
};

std::string_view to_string(ErrorCode code);

// True for the codes that mean "not enough data to fit" rather than bad input.
bool is_insufficient_data(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failure with 1-based line provenance (0 when no line applies).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace wxscale
