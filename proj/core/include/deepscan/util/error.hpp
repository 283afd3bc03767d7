#pragma once

#include <stdexcept>
#include <string>

namespace deepscan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or image geometry does not match an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside its permitted range (sample bit depth, config bounds).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf appeared where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Layer state used before it was initialized.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Filesystem failures (unwritable path, missing file).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace deepscan
