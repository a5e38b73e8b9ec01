#pragma once

#include <stdexcept>
#include <string>

namespace skydepth {

// Base for every error raised by the library. Callers that only need a
// message can catch std::runtime_error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or image extents do not satisfy an operation's shape rule.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value is outside the domain an operation accepts (NaN distance,
// even kernel size, empty bbox, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

// Non-finite numbers showed up where they would poison later state.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file content, or a failed read/write.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace skydepth
