#pragma once

#include <stdexcept>
#include <string>

namespace lsdgnn {

// Base class for every error this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input validation failures. The CLI maps these to exit code 1.
struct ValidationError : Error {
  using Error::Error;
};

struct DimensionError : ValidationError {
  using ValidationError::ValidationError;
};
struct DomainError : ValidationError {
  using ValidationError::ValidationError;
};
struct IndexError : ValidationError {
  using ValidationError::ValidationError;
};
struct ConfigError : ValidationError {
  using ValidationError::ValidationError;
};
struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};
struct FormatError : ValidationError {
  using ValidationError::ValidationError;
};
struct DataError : ValidationError {
  using ValidationError::ValidationError;
};
struct LookupError : ValidationError {
  using ValidationError::ValidationError;
};
// Checkpoint format_version the loader does not understand.
struct VersionError : ValidationError {
  using ValidationError::ValidationError;
};

// API misuse and internal failures. The CLI maps these to exit code 2.
struct ContractError : Error {
  using Error::Error;
};
// A forward op produced NaN/Inf from finite inputs.
struct NumericError : Error {
  using Error::Error;
};
// The gradient checker detected a non-deterministic loss function.
struct CheckError : Error {
  using Error::Error;
};
// Training aborted (non-finite loss, etc.).
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace lsdgnn
