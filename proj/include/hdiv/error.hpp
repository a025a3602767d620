#pragma once

#include <stdexcept>
#include <string>

namespace hdiv {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (shapes, parse failures, invalid options).
struct DataError : Error {
    using Error::Error;
};

/// A computation could not produce a valid result (singular matrix,
/// degenerate nodewise fit, solver failure, loss of identification).
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace hdiv
