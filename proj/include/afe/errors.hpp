#pragma once

#include <stdexcept>
#include <string>

namespace afe {

// Argument or shape problems detected before any work is done.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (bad RIFF header, truncated checkpoint, ...).
class FormatError : public IoError {
public:
  using IoError::IoError;
};

class UnsupportedError : public IoError {
public:
  using IoError::IoError;
};

class IncompatibleCheckpoint : public IoError {
public:
  using IoError::IoError;
};

// Non-finite values during training or sampling.
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace afe
