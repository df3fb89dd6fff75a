#pragma once

#include <stdexcept>
#include <string>

namespace w4mu {

// Shape or dimension mismatch between tensors.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition (bad label, empty set, ...).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computation produced NaN/Inf or otherwise left the finite domain.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Internal API contract broken (e.g. backward on a non-scalar loss).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file content; message carries the line number where known.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace w4mu
