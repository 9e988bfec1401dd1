#ifndef KXQDA_ERROR_HPP
#define KXQDA_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace kxqda {

enum class ErrorKind {
  InvalidMatrix,
  SingularDenominator,
  SingularScatter,
  ShapeError,
  ParseError,
  LabelError,
  ConfigError,
  InsufficientPairs,
  TooLarge,
  DegenerateBandwidth,
  EmptyEval,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::SingularDenominator: return "SingularDenominator";
    case ErrorKind::SingularScatter: return "SingularScatter";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::LabelError: return "LabelError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::InsufficientPairs: return "InsufficientPairs";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::DegenerateBandwidth: return "DegenerateBandwidth";
    case ErrorKind::EmptyEval: return "EmptyEval";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace kxqda

#endif  // KXQDA_ERROR_HPP
