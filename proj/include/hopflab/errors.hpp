#pragma once

#include <stdexcept>
#include <string>

namespace hopflab {

// Bad arguments or malformed input.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Request exceeds a size guard.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numerical procedure did not produce a usable result.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hopflab
