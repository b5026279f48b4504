#pragma once

#include <stdexcept>
#include <string>

namespace scanline {

struct GeometryOutOfBounds : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidPrior : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Anchor points coincide; the distance Jacobian is singular there.
struct DegenerateDistance : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BudgetExceedsWidth : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace scanline
