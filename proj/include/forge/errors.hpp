#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Configuration / usage mistakes (CLI exit code 1).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatches between tensors, masks, or stores (CLI exit code 2).
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf detected, or a malformed numeric operation (CLI exit code 2).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint / dataset file problems (CLI exit code 2).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace forge
