#pragma once

#include <stdexcept>
#include <string>

namespace epivar {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed an argument that violates a documented precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A file could not be parsed; carries the 1-based row and column when known.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, long row, long column)
      : InputError(what), row_(row), column_(column) {}
  explicit ParseError(const std::string& what) : InputError(what) {}
  long row() const { return row_; }
  long column() const { return column_; }

 private:
  long row_ = -1;
  long column_ = -1;
};

/// A numerical procedure failed (divergence, ill-conditioning, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Training loss became non-finite or blew up; carries the offending epoch.
class DivergedTrainingError : public NumericError {
 public:
  DivergedTrainingError(const std::string& what, int epoch)
      : NumericError(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// The kernel system could not be factorized even after jitter escalation.
class IllConditionedError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace epivar
