#pragma once

#include <stdexcept>
#include <string>

namespace lapsecount {

/// Filesystem / missing-input failures. The CLI maps these to exit code 2.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite losses, diverged training, failed numeric contracts.
/// The CLI maps these to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lapsecount
