#pragma once

#include <stdexcept>
#include <string>

namespace cogmove {

inline constexpr double pi = 3.14159265358979323846;

inline constexpr const char* version = "0.1.0";

// Invalid parameters, malformed configs, violated sign constraints.
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime numerical failure: divergence, CFL rejection, non-convergent
// root finding. The CLI maps this to exit code 3.
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure while emitting outputs. The CLI maps this to exit code 4.
class FileError : public std::runtime_error {
 public:
  explicit FileError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cogmove
