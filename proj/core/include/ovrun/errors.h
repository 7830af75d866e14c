#ifndef OVRUN_ERRORS_H_
#define OVRUN_ERRORS_H_

#include <stdexcept>
#include <string>

namespace ovrun {

// Base class for every error raised by the library. The CLI maps the
// subclasses below onto distinct process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration (generator, model or training knobs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or unusable data: corpus files, vocabularies, checkpoints,
// samples that do not fit the encoder.
class DataError : public Error {
 public:
  using Error::Error;
};

// A story line the oracle interpreter does not understand. Raised when the
// generator and the oracle drift apart.
class UnsupportedConstructError : public DataError {
 public:
  using DataError::DataError;
};

// Story has more lines than the memory capacity N.
class CapacityError : public DataError {
 public:
  using DataError::DataError;
};

// A line has more tokens than the encoder width J.
class EncodingError : public DataError {
 public:
  using DataError::DataError;
};

// Non-finite value encountered during forward/backward or training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller broke a precondition (mismatched lengths or dimensions).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Metric undefined for the given input, e.g. AUC with a single class.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace ovrun

#endif  // OVRUN_ERRORS_H_
