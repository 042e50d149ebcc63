#pragma once

#include <stdexcept>
#include <string>

namespace mbrf {

/// Invalid configuration value; the message names the offending key or bound.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension or architecture mismatch between tensors/networks.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File-system failure; the message carries the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mbrf
