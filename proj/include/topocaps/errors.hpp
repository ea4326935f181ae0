#pragma once

#include <stdexcept>
#include <string>

namespace topocaps {

// Invalid configuration (bad hyperparameters, inconsistent preset/layout).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched tensor/vector dimensions.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input value outside the mathematically valid domain.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed external data (IDX payloads, checkpoints).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse (stale cache, empty dataset, out-of-range step).
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace topocaps
