#pragma once

#include <stdexcept>
#include <string>

namespace pprviz {

// User-facing failures (bad input, bad arguments) map to exit code 1,
// InvariantError maps to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : Error {
  using Error::Error;
};

struct NotFoundError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace pprviz
