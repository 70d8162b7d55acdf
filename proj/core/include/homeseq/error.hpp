// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace homeseq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input text that does not follow the declared grammar.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a data invariant (ordering, unknown ids, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or arguments supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace homeseq
