#pragma once

#include <stdexcept>
#include <string>

namespace augopt {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A matrix violates a structural precondition (non-finite entries,
/// asymmetry where symmetry is required, indefiniteness, ...).
struct InvalidMatrix : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct InvalidParameter : Error {
    using Error::Error;
};

struct InvalidData : Error {
    using Error::Error;
};

/// Requested a closed-form computation for a scheme that only has
/// Monte-Carlo moments.
struct UnsupportedScheme : Error {
    using Error::Error;
};

struct ConfigError : Error {
    ConfigError(const std::string& msg, int line = 0) : Error(msg), line(line) {}
    int line;
};

}  // namespace augopt
