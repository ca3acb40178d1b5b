// Error types shared by every tracelens module.
//
// The CLI maps these onto process exit codes: ArgumentError and
// ValidationError -> 2, IoError -> 3, ContractError -> 4.

#ifndef TRACELENS_ERRORS_H_
#define TRACELENS_ERRORS_H_

#include <stdexcept>
#include <string>
#include <utility>

namespace tracelens {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// The input is well formed but carries no structure to analyze, e.g.
// clustering identical points into three classes.
class DegenerateInputError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Unreadable or unwritable file. The message names the file.
class IoError : public Error {
 public:
  using Error::Error;
};

// A distribution fit could not be computed for the given sample.
class FitError : public Error {
 public:
  using Error::Error;
};

// An internal invariant or a callback contract was broken.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A configuration key failed validation.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& message)
      : Error(key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace tracelens

#endif  // TRACELENS_ERRORS_H_
