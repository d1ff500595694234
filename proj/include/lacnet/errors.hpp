#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lacnet {

/// Bad configuration value or unknown key. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or missing input data (dataset files, masks, annotations). Exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or other numerical breakdown. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::int64_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_;
};

}  // namespace lacnet
