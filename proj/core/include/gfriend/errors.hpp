#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfriend {

// Base of every error thrown by the library. The CLI maps subclasses onto
// distinct exit codes, so each failure class gets its own type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ContextExceededError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data. `line` is 1-based, 0 when unknown.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class IdentifiabilityError : public Error {
 public:
  using Error::Error;
};

// Held-out set shares questions with the training set.
class OverlapError : public DataError {
 public:
  explicit OverlapError(std::vector<std::string> hashes);
  const std::vector<std::string>& hashes() const noexcept { return hashes_; }

 private:
  std::vector<std::string> hashes_;
};

}  // namespace gfriend
