#pragma once

#include <stdexcept>
#include <string>

namespace elastiq {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent shapes, invalid hyper-parameters, bad scenario fields.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Non-finite values or a numerically broken state.
class NumericError : public Error {
  public:
    using Error::Error;
};

/// A weighted loss whose weights are all zero (fully filtered batch).
class EmptyLossError : public NumericError {
  public:
    using NumericError::NumericError;
};

/// Malformed file content: CSV rows, checkpoint JSON, config JSON.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Dataset content that violates a record invariant.
class DataError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

#define ELASTIQ_REQUIRE(cond, ErrorType, msg)                                                      \
    do {                                                                                           \
        if (!(cond)) throw ErrorType(msg);                                                         \
    } while (false)

} // namespace elastiq
