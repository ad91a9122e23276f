#pragma once

#include <stdexcept>
#include <string>

namespace firank {

// Process exit codes shared by the CLI and scripts driving it.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

// Bad configuration: invalid flag combinations, mis-shaped parameters,
// impossible layer stacks.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mis-shaped tensor arguments to a kernel.
struct DimensionError : ConfigError {
  using ConfigError::ConfigError;
};

// Malformed or inconsistent input data (datasets, schemas, checkpoints).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Categorical id outside the declared vocabulary.
struct VocabError : DataError {
  using DataError::DataError;
};

// Checkpoint written by an incompatible format revision.
struct VersionError : DataError {
  using DataError::DataError;
};

// Non-finite values where finite ones are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return kExitData;
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return kExitNumeric;
  return kExitConfig;
}

}  // namespace firank
