#pragma once

#include <stdexcept>
#include <string>

namespace trackanno {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Unreadable or malformed external input (files, fixtures).
class InputError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IncompleteReview : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// External process failed, timed out or produced no output.
class ProcessError : public Error {
 public:
  using Error::Error;
};

}  // namespace trackanno
