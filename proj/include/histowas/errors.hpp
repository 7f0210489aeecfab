#pragma once

#include <stdexcept>
#include <string>

namespace histowas {

/// Base class for all histowas errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An estimator was asked to run on fewer points than it is defined for.
struct InsufficientPointsError : Error {
    explicit InsufficientPointsError(const std::string& msg) : Error(msg) {}
};

/// No cluster produced a usable convex hull; density features are undefined.
struct NoWindowError : Error {
    explicit NoWindowError(const std::string& msg) : Error(msg) {}
};

/// Bad user-supplied configuration (flag values, config files).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// File reading/writing or format violations.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace histowas
