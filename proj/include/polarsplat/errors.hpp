#pragma once

#include <stdexcept>
#include <string>

namespace polarsplat {

/// Invalid or missing configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values or divergence during optimization (CLI exit code 3).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Missing, unreadable or malformed files (CLI exit code 1).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace polarsplat
