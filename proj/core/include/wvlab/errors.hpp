#ifndef WVLAB_ERRORS_HPP
#define WVLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wvlab {

// One error kind per contract violation the library can signal.  The CLI
// maps kinds onto exit codes (parse -> 2, physics -> 3, network -> 4).
enum class ErrorKind {
  InvalidArgument,         // bad dimensions, tolerance violations, bad input
  OrthogonalPostselection, // |<psi_f|psi_i>| below the overlap guard
  DegenerateResource,      // NonMax(0): product state, protocol amplitude vanishes
  ImpossiblePostselection, // every pointer branch coefficient is zero
  InsufficientStatistics,  // Monte Carlo run ended with zero accepted shots
  GridError,               // pointer grid too small / malformed
  ParseError,              // scenario file or message body rejected
  DecodeError,             // wire frame rejected
  NetworkError,            // socket failure, timeout, protocol-order violation
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::OrthogonalPostselection: return "orthogonal-postselection";
    case ErrorKind::DegenerateResource: return "degenerate-resource";
    case ErrorKind::ImpossiblePostselection: return "impossible-postselection";
    case ErrorKind::InsufficientStatistics: return "insufficient-statistics";
    case ErrorKind::GridError: return "grid-error";
    case ErrorKind::ParseError: return "parse-error";
    case ErrorKind::DecodeError: return "decode-error";
    case ErrorKind::NetworkError: return "network-error";
  }
  return "unknown";
}

} // namespace wvlab

#endif
