#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

/// Base class for all library errors. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration, parameters or input dimensions (exit code 2).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Numerical scheme failure: CFL violation, loss of positivity, divergence (exit code 3).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// Statistical validity failure: rejection rate too high, non-finite moments (exit code 4).
class StatisticalError : public Error {
public:
    explicit StatisticalError(const std::string& msg) : Error(msg) {}
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int numerical = 3;
inline constexpr int statistical = 4;
}  // namespace exit_code

}  // namespace driftlab
