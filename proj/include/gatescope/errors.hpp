#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gatescope {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Position inside a text input. Lines and columns are 1-based.
struct SourceLocation {
  std::string file;
  std::size_t line = 0;
  std::size_t column = 0;

  [[nodiscard]] std::string to_string() const {
    return file + ":" + std::to_string(line) + ":" + std::to_string(column);
  }
};

/// Syntax or semantic error in a text input; message is `file:line:col: text`.
class ParseError : public Error {
 public:
  ParseError(SourceLocation loc, const std::string& message)
      : Error(loc.to_string() + ": " + message), location_(std::move(loc)), detail_(message) {}

  [[nodiscard]] const SourceLocation& location() const { return location_; }
  [[nodiscard]] const std::string& detail() const { return detail_; }

 private:
  SourceLocation location_;
  std::string detail_;
};

/// Invalid mutation or query against a netlist.
class NetlistError : public Error {
 public:
  using Error::Error;
};

}  // namespace gatescope
