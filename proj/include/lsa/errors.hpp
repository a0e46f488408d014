#pragma once

#include <stdexcept>
#include <string>

namespace lsa {

// Root of the library's exception hierarchy. The CLI maps the leaf types onto
// exit codes: UsageError -> 1, DataError (and subclasses) -> 2, NumericError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Tensor shape disagreement. Raised at op construction time, never during backward.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Misuse of the differentiation tape (stale tape, non-scalar root, missing grads).
class TapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Anything wrong with input files: schema violations, span mismatches, bad parses.
class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class SpanMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace lsa
