#pragma once

#include <stdexcept>
#include <string>

namespace randcrowns {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two regions living on different plot frames were combined.
class FrameMismatch : public Error {
 public:
  FrameMismatch() : Error("regions belong to different plot frames") {}
};

/// The true positive region of a target is empty, so no score exists.
class DegenerateTarget : public Error {
 public:
  using Error::Error;
};

/// Input data failed validation (bad geometry, missing properties, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input document.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace randcrowns
