#pragma once

#include <stdexcept>
#include <string>

namespace depthbench {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes or extents do not satisfy an operation's precondition.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A forward or backward pass produced NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed file or byte stream (PFM, PNM, checkpoint, manifest).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value (unknown variant, bad ratio, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace depthbench
