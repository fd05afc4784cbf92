#pragma once

#include <stdexcept>
#include <string>

namespace capsep {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input text (missing section, bad token).
struct FormatError : Error {
    using Error::Error;
};

/// A token parsed but its value is unusable (non-integer demand, ...).
struct ValueError : Error {
    using Error::Error;
};

/// Violated precondition or domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

/// Tensor / feature dimension mismatch.
struct ShapeError : Error {
    using Error::Error;
};

/// Operation called in the wrong order (backward before forward, ...).
struct StateError : Error {
    using Error::Error;
};

/// Condition that indicates a bug rather than bad input.
struct InternalError : Error {
    using Error::Error;
};

} // namespace capsep
