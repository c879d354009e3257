#pragma once

#include <stdexcept>
#include <string>

namespace fsnn {

// Base for every error the library raises. Each subclass maps onto one
// CLI exit-code category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration values (non-integral step ratios, empty acceptance
// regions, dimension ceilings).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (files, trajectories, state sizes).
class InputError : public Error {
public:
    using Error::Error;
};

// A solver stage produced a non-finite value.
class IntegrationError : public Error {
public:
    IntegrationError(std::size_t state_index, double time, const std::string& what)
        : Error(what), state_index_(state_index), time_(time) {}

    std::size_t state_index() const noexcept { return state_index_; }
    double time() const noexcept { return time_; }

private:
    std::size_t state_index_;
    double time_;
};

// Non-finite network parameters.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// Rejection sampling failed to fill its quota.
class SamplingError : public Error {
public:
    using Error::Error;
};

} // namespace fsnn
