#include "psmrr/error.hpp"

namespace psmrr {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::bounds: return "bounds";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::parse: return "parse";
    case ErrorKind::no_peak: return "no-peak";
    case ErrorKind::design: return "design";
    case ErrorKind::identifiability: return "identifiability";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::nesting: return "nesting";
    case ErrorKind::undefined_correlation: return "undefined-correlation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace psmrr
