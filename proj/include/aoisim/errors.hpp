#pragma once

#include <stdexcept>
#include <string>

namespace aoisim {

/// Invalid user input: bad config values, malformed files, unknown names.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A solver failed to converge within its budget.
struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem / output failures.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace aoisim
