#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slalom {

// Base for every error the library raises. Input problems (malformed files,
// violated preconditions) derive from InputError; the CLI maps those to exit
// code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}

  std::size_t line() const noexcept { return line_; }
  // The message without the line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

// Raised by an EmbeddingProvider backend; extract_trajectory rewraps it with
// the failing bin index.
class ProviderError : public Error {
 public:
  using Error::Error;
};

}  // namespace slalom
