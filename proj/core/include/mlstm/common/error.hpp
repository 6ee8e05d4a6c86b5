#pragma once

#include <stdexcept>
#include <string>

namespace mlstm {

// Root of every error the library throws. Callers that only need to report a
// failure can catch this; the subclasses exist so the CLI can map failures to
// exit codes and tests can assert on the failure class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class SingularParameterError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Corpus/data problems: too few records, shards outnumbering records, bad files.
class DataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class ShardsExceedRecordsError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class ReportError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mlstm
