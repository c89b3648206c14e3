#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcontrast {

// Bad user-supplied values: spec fields, labels, grids, CLI arguments.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent or out-of-range configuration keys.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Array shape mismatches between operations.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed on-disk artifacts; carries the byte offset of the defect.
struct FormatError : std::runtime_error {
    FormatError(const std::string& msg, std::size_t byte_offset)
        : std::runtime_error(msg + " (at byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

// Non-finite values or failed numeric checks.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gcontrast
