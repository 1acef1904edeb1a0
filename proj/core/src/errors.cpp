#include "popvb/errors.hpp"

namespace popvb {

namespace {

std::string describe(const std::string& message, std::size_t column, std::size_t line) {
  std::string where;
  if (line > 0) where += "line " + std::to_string(line) + ", ";
  where += "column " + std::to_string(column);
  return where + ": " + message;
}

}  // namespace

ParseError::ParseError(std::string message, std::size_t column, std::size_t line)
    : std::runtime_error(describe(message, column, line)), detail_(std::move(message)), column_(column), line_(line) {}

}  // namespace popvb
