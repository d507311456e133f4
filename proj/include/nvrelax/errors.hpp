#pragma once

#include <stdexcept>
#include <string>

namespace nvrelax {

// Root of all library errors. The CLI maps each subclass to a stable exit code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
public:
  using Error::Error;
};

class DegeneracyError : public Error {
public:
  using Error::Error;
};

class InconsistencyError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class DegenerateReadoutError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

class BootstrapUnstableError : public Error {
public:
  using Error::Error;
};

class NumericOverflowError : public Error {
public:
  using Error::Error;
};

// Malformed input; message carries the key path or column name.
class ParseError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace nvrelax
