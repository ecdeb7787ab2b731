#pragma once

#include <stdexcept>
#include <string>

namespace greenlens {

// Bad input data or an invalid configuration. The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure while executing an otherwise valid request (exit code 3).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace greenlens
