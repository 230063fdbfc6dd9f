#pragma once

#include <stdexcept>
#include <string>

namespace mlm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes, lengths or indices that do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An iterative decomposition or solver failed to converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Normal equations that cannot be solved without regularization.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// Dataset content that violates the labeling contract (missing or conflicting cells).
class DataError : public Error {
public:
    using Error::Error;
};

/// Persisted artifact that cannot be read: bad magic, version, checksum or syntax.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Input values that are outside the domain of an operation (non-finite, negative weights, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

} // namespace mlm
