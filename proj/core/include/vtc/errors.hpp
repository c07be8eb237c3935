#pragma once

#include <stdexcept>
#include <string>

namespace vtc {

// Error taxonomy mirrors the CLI exit codes: ConfigError -> 1, DataError -> 2,
// InternalError (broken invariant) -> 3.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

// Calibration aborts (e.g. replay file missing a response) are data problems.
class CalibrationError : public DataError {
 public:
  explicit CalibrationError(const std::string& what) : DataError(what) {}
};

}  // namespace vtc
