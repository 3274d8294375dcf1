#pragma once

#include <stdexcept>
#include <string>

namespace compound {

// Bad arguments or violated preconditions. The CLI maps this to exit code 2.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

// An enumeration or construction would exceed a configured ceiling.
// The CLI maps this to exit code 3.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files.  Also exit code 2 at the CLI boundary.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace compound
