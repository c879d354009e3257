#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace fsnn {

// One value per state variable, in model units.
using StateVector = std::vector<double>;

// Uniformly sampled states. samples[k] is the state at
// first_time + k * sample_interval.
struct Trajectory {
    double first_time = 0.0;
    double sample_interval = 1.0;
    std::vector<StateVector> samples;
    std::vector<std::string> state_names;

    std::size_t size() const { return samples.size(); }
    double time_at(std::size_t k) const { return first_time + static_cast<double>(k) * sample_interval; }
};

// Default names State_1 .. State_n.
inline std::vector<std::string> default_state_names(std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        names.push_back("State_" + std::to_string(i + 1));
    return names;
}

namespace detail {

// Returns the integer ratio num/den, or -1 if it is not a positive
// integer within 1e-9.
inline long integer_ratio(double num, double den) {
    const double r = num / den;
    const double rounded = std::round(r);
    if (rounded < 1.0 || std::abs(r - rounded) > 1e-9)
        return -1;
    return static_cast<long>(rounded);
}

} // namespace detail

struct IntegrationConfig {
    double dt = 0.25;
    double horizon = 100.0;
    double sample_interval = 1.0;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw ConfigError("integration: dt must be positive and finite");
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw ConfigError("integration: horizon must be positive and finite");
        if (!(sample_interval > 0.0) || !std::isfinite(sample_interval))
            throw ConfigError("integration: sample_interval must be positive and finite");
        if (detail::integer_ratio(horizon, dt) < 0)
            throw ConfigError("integration: horizon / dt must be a positive integer");
        if (detail::integer_ratio(sample_interval, dt) < 0)
            throw ConfigError("integration: sample_interval / dt must be a positive integer");
    }

    std::size_t step_count() const { return static_cast<std::size_t>(detail::integer_ratio(horizon, dt)); }
    std::size_t steps_per_sample() const {
        return static_cast<std::size_t>(detail::integer_ratio(sample_interval, dt));
    }
    // Number of samples with t0 excluded; the final partial interval, if
    // any, is not sampled.
    std::size_t sample_count() const { return step_count() / steps_per_sample(); }

    // Same horizon, sampled at every solver step.
    IntegrationConfig dense() const { return {dt, horizon, dt}; }
};

namespace detail {

inline void check_finite(const StateVector& v, double t, const char* stage) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]))
            throw IntegrationError(i, t,
                                   std::string("non-finite ") + stage + " at state index " + std::to_string(i) +
                                       ", t = " + std::to_string(t));
    }
}

} // namespace detail

// Classical four-stage Runge-Kutta step. `derivs(s, t)` returns ds/dt.
template <typename Derivs>
StateVector rk4_step(Derivs&& derivs, const StateVector& s, double t, double dt) {
    const std::size_t n = s.size();
    StateVector tmp(n);

    const StateVector k1 = derivs(s, t);
    detail::check_finite(k1, t, "RK4 stage 1");
    for (std::size_t i = 0; i < n; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
    const StateVector k2 = derivs(tmp, t + 0.5 * dt);
    detail::check_finite(k2, t, "RK4 stage 2");
    for (std::size_t i = 0; i < n; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
    const StateVector k3 = derivs(tmp, t + 0.5 * dt);
    detail::check_finite(k3, t, "RK4 stage 3");
    for (std::size_t i = 0; i < n; ++i) tmp[i] = s[i] + dt * k3[i];
    const StateVector k4 = derivs(tmp, t + dt);
    detail::check_finite(k4, t, "RK4 stage 4");

    StateVector next(n);
    for (std::size_t i = 0; i < n; ++i)
        next[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    detail::check_finite(next, t + dt, "RK4 result");
    return next;
}

struct IntegrateOptions {
    double t0 = 0.0;
    // Training targets exclude the initial condition; plotting and link
    // scores want it.
    bool include_t0 = false;
    std::vector<std::string> state_names = {};
};

// Repeated rk4_step at cfg.dt, sampled every cfg.sample_interval.
template <typename Derivs>
Trajectory integrate(Derivs&& derivs, const StateVector& init, const IntegrationConfig& cfg,
                     const IntegrateOptions& opts = {}) {
    cfg.validate();
    detail::check_finite(init, opts.t0, "initial state");
    if (!opts.state_names.empty() && opts.state_names.size() != init.size())
        throw ConfigError("integrate: state_names size does not match the initial state");

    const std::size_t steps = cfg.step_count();
    const std::size_t stride = cfg.steps_per_sample();

    Trajectory traj;
    traj.sample_interval = cfg.sample_interval;
    traj.first_time = opts.include_t0 ? opts.t0 : opts.t0 + cfg.sample_interval;
    traj.state_names = opts.state_names.empty() ? default_state_names(init.size()) : opts.state_names;
    traj.samples.reserve(steps / stride + 1);
    if (opts.include_t0)
        traj.samples.push_back(init);

    StateVector s = init;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t = opts.t0 + static_cast<double>(k - 1) * cfg.dt;
        s = rk4_step(derivs, s, t, cfg.dt);
        if (k % stride == 0)
            traj.samples.push_back(s);
    }
    return traj;
}

// Every step-boundary state from t0 to t0 + horizon inclusive.
template <typename Derivs>
Trajectory integrate_dense(Derivs&& derivs, const StateVector& init, const IntegrationConfig& cfg,
                           std::vector<std::string> state_names = {}) {
    return integrate(std::forward<Derivs>(derivs), init, cfg.dense(),
                     IntegrateOptions{0.0, true, std::move(state_names)});
}

} // namespace fsnn
