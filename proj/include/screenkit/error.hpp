#pragma once

#include <stdexcept>
#include <string>

namespace screenkit {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a precondition (bad file, missing class, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Caller passed an invalid argument or configuration.
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace screenkit
