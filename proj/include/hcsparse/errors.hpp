#pragma once

#include <stdexcept>
#include <string>

namespace hcsparse {

/// A parameter lies outside the operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The boundary solver could not bracket a sign change.
class BracketError : public std::runtime_error {
 public:
  BracketError(const std::string& what, double cap) : std::runtime_error(what), cap_(cap) {}
  double cap() const noexcept { return cap_; }

 private:
  double cap_;
};

/// Malformed input file; carries the 1-based position of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace hcsparse
