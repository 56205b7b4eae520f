#pragma once

#include <stdexcept>
#include <string>

namespace frisk {

// Bad run configuration or malformed input files. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical procedure failed (non-convergence, singular matrix, ...). CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// The requested statistic is degenerate for this problem (zero variance,
// unreachable probability level, ...). CLI exit code 4.
class DegenerateError : public std::runtime_error {
public:
    explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace frisk
