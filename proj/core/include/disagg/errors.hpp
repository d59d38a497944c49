#pragma once

#include <stdexcept>
#include <string>

namespace disagg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative sd, sigma <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Shapes that do not line up (non-divisible grids, mismatched feature widths).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Data with no usable spread: zero variance, a collapsed cluster, an empty mask.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A required variable or column is missing from a scene or file.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent files on disk.
class DataError : public Error {
public:
    using Error::Error;
};

/// Linear solves and iterations that fail numerically.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Bad command-line or configuration input.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace disagg
