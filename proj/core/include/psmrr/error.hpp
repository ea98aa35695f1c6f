#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psmrr {

enum class ErrorKind {
  bounds,
  empty_input,
  insufficient_data,
  degenerate_input,
  invalid_parameter,
  parse,
  no_peak,
  design,
  identifiability,
  convergence,
  nesting,
  undefined_correlation,
  io,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure with the 1-based line where it was detected; line 0 means
/// the location is carried by the message alone (e.g. a JSON frame index).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::parse, line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace psmrr
