#pragma once

#include <stdexcept>
#include <string>

namespace whmc {

// Raised when a numeric routine cannot meet its tolerance contract
// (quadrature non-convergence, root bracketing failure, cancellation).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised for malformed or inconsistent experiment configuration.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace whmc
