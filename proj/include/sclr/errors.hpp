#pragma once

#include <stdexcept>
#include <string>

namespace sclr {

// Configuration text problems: bad JSON, unknown keys, constraint violations.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem and file-format problems: missing paths, bad magic, truncation.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sclr
