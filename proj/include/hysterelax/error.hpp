#pragma once

#include <stdexcept>
#include <string>

namespace hysterelax {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A nonlinear or linear solve did not converge.
class SolverFailure : public Error {
public:
    using Error::Error;
};

/// Initial data violate the memory compatibility conditions.
class CompatibilityError : public Error {
public:
    using Error::Error;
};

/// Configuration or file input could not be parsed.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace hysterelax
