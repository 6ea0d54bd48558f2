#pragma once

#include <stdexcept>
#include <string>

namespace subclust {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input data, configuration, or contract violation. CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed on-disk content; the message names the offending field.
class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Filesystem failure (unreadable path, write failure). CLI exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

/// Degenerate geometry: rank-deficient scatter, coincident points, no consensus.
class FitError : public Error {
public:
    using Error::Error;
};

/// Scene generation exhausted its retry budget.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite arithmetic was required.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace subclust
