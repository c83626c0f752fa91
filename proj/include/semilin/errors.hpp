#pragma once

#include <stdexcept>
#include <string>

namespace semilin {

enum class ErrorKind {
  Domain,        // argument outside the mathematical domain (e.g. s <= t)
  Validation,    // an object violates its declared invariants
  Data,          // non-finite or otherwise unusable numeric data
  Precondition,  // caller broke an operation's precondition
  Parse,         // config / expression syntax
  Io,
  Stage,         // orchestration stage failure (wraps another error)
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ", column " +
                                    std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace semilin
