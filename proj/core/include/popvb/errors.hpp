#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace popvb {

// Malformed input text. `line` is 1-based (0 when unknown), `column` is the
// 1-based character position of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t column, std::size_t line = 0);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& detail() const { return detail_; }
  ParseError at_line(std::size_t line) const { return ParseError(detail_, column_, line); }

 private:
  std::string detail_;
  std::size_t column_;
  std::size_t line_;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN or infinity in global variational parameters.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace popvb
