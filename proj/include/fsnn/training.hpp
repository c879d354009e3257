#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dynsys.hpp"
#include "errors.hpp"
#include "ground_truth.hpp"
#include "model.hpp"
#include "optimize.hpp"

namespace fsnn {

// Payoff assigned to parameter vectors whose simulation breaks down.
inline constexpr double kDivergencePenalty = 1e18;

struct TrainingConfig {
    IntegrationConfig integration;
    // Symmetric box [-bounds, bounds] on every parameter.
    double bounds = 10.0;
    std::size_t budget = 20000;
    std::uint64_t seed = 1;
    std::string optimizer = "trust-region-dfo";
    std::size_t restarts = 0;
    // All-zero parameters are a stationary point of every weight (each
    // weight's effect passes through zero activations), so each run starts
    // from zero plus N(0, init_scale^2) noise drawn from the seed.
    double init_scale = 0.01;
    // Trust-region / finite-difference starting radius.
    double initial_radius = 0.1;
    // Stop early once the overall RMSE falls to this value (0 disables).
    double target_rmse = 0.0;
    std::size_t max_dimension = 2000;

    void validate() const {
        integration.validate();
        if (budget < 1)
            throw ConfigError("training: budget must be at least 1");
        if (!(bounds > 0.0) || !std::isfinite(bounds))
            throw ConfigError("training: bounds must be positive and finite");
        if (!(init_scale >= 0.0) || !(initial_radius > 0.0) || !(target_rmse >= 0.0))
            throw ConfigError("training: init_scale, initial_radius and target_rmse must be non-negative");
        opt::make_minimizer(optimizer);
    }
};

namespace detail {

inline void check_datasets(const ModelShape& shape, const std::vector<TrainingDataset>& datasets) {
    if (datasets.empty())
        throw InputError("training: no datasets");
    for (const auto& d : datasets) {
        if (d.initialization.size() != shape.n_states())
            throw InputError("training: dataset initialization has the wrong number of states");
        if (d.trajectory.samples.empty())
            throw InputError("training: empty dataset trajectory");
        for (const auto& s : d.trajectory.samples)
            if (s.size() != shape.n_states())
                throw InputError("training: dataset rows have the wrong number of states");
    }
}

// The dataset fixes horizon and sample spacing; dt comes from the caller.
inline IntegrationConfig dataset_integration(const TrainingDataset& d, const IntegrationConfig& cfg) {
    const double interval = d.trajectory.sample_interval;
    IntegrationConfig out{cfg.dt, interval * static_cast<double>(d.trajectory.samples.size()), interval};
    out.validate();
    return out;
}

} // namespace detail

inline std::size_t residual_count(const std::vector<TrainingDataset>& datasets) {
    std::size_t count = 0;
    for (const auto& d : datasets)
        count += d.trajectory.samples.size() * d.initialization.size();
    return count;
}

// Simulated-minus-observed values, dataset-major then sample then state.
// Returns false when a simulation fails.
inline bool payoff_residuals(const ModelShape& shape, std::span<const double> params,
                             const std::vector<TrainingDataset>& datasets, const IntegrationConfig& integration,
                             std::span<double> out) {
    const GeneratedModel model(shape, ParameterVector(params.begin(), params.end()));
    std::size_t k = 0;
    try {
        for (const auto& d : datasets) {
            const Trajectory sim = integrate(model, d.initialization, detail::dataset_integration(d, integration));
            for (std::size_t i = 0; i < sim.samples.size(); ++i)
                for (std::size_t j = 0; j < sim.samples[i].size(); ++j)
                    out[k++] = sim.samples[i][j] - d.trajectory.samples[i][j];
        }
    } catch (const IntegrationError&) {
        return false;
    }
    return true;
}

// Sum over datasets, samples and states of (simulated - observed)^2.
inline double payoff(std::span<const double> params, const ModelShape& shape,
                     const std::vector<TrainingDataset>& datasets, const IntegrationConfig& integration) {
    detail::check_datasets(shape, datasets);
    std::vector<double> r(residual_count(datasets));
    if (!payoff_residuals(shape, params, datasets, integration, r))
        return kDivergencePenalty;
    double sum = 0.0;
    for (double v : r)
        sum += v * v;
    return std::isfinite(sum) ? sum : kDivergencePenalty;
}

inline std::vector<double> per_state_rmse(std::span<const double> params, const ModelShape& shape,
                                          const std::vector<TrainingDataset>& datasets,
                                          const IntegrationConfig& integration) {
    const std::size_t n = shape.n_states();
    std::vector<double> r(residual_count(datasets));
    std::vector<double> out(n, std::sqrt(kDivergencePenalty));
    if (!payoff_residuals(shape, params, datasets, integration, r))
        return out;
    std::vector<double> sum(n, 0.0);
    for (std::size_t k = 0; k < r.size(); ++k)
        sum[k % n] += r[k] * r[k];
    const double rows = static_cast<double>(r.size() / n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::sqrt(sum[i] / rows);
    return out;
}

struct TrainingResult {
    ParameterVector params;
    double payoff = 0.0;
    std::size_t evaluations_used = 0;
    bool converged = false;
    std::vector<double> per_state_rmse;
    std::string optimizer;
    // (evaluation index, best payoff so far), one entry per evaluation.
    std::vector<opt::TracePoint> trace;
};

inline std::vector<opt::TracePoint> best_so_far_trace(const TrainingResult& result) { return result.trace; }

// Fits the model from zero parameters. `extra_starts` are additional
// starting points (for example a known-good parameter vector), each run as
// its own restart after the seeded ones.
inline TrainingResult train(const TrainingConfig& cfg, const std::vector<TrainingDataset>& datasets,
                            const ModelShape& shape, const std::vector<ParameterVector>& extra_starts = {}) {
    cfg.validate();
    detail::check_datasets(shape, datasets);
    const std::size_t dim = shape.param_count();
    if (dim > cfg.max_dimension)
        throw ConfigError("training: " + std::to_string(dim) + " parameters exceed the ceiling of " +
                          std::to_string(cfg.max_dimension));
    for (const auto& s : extra_starts)
        if (s.size() != dim)
            throw ConfigError("training: injected start has the wrong dimension");
    const auto minimizer = opt::make_minimizer(cfg.optimizer);

    opt::LeastSquaresProblem problem;
    problem.dimension = dim;
    problem.residual_count = residual_count(datasets);
    problem.lower.assign(dim, -cfg.bounds);
    problem.upper.assign(dim, cfg.bounds);
    problem.residuals = [&](std::span<const double> x, std::span<double> r) {
        return payoff_residuals(shape, x, datasets, cfg.integration, r);
    };

    TrainingResult result;
    result.optimizer = minimizer->name();
    result.params = zero_params(shape.architecture(), shape.mask());
    result.payoff = payoff(result.params, shape, datasets, cfg.integration);
    result.evaluations_used = 1;
    result.trace.push_back({1, result.payoff});

    std::vector<ParameterVector> starts;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t r = 0; r <= cfg.restarts; ++r) {
        ParameterVector x(dim);
        for (double& v : x)
            v = cfg.init_scale * noise(rng);
        starts.push_back(std::move(x));
    }
    starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());

    const double target_payoff = cfg.target_rmse * cfg.target_rmse * static_cast<double>(problem.residual_count);
    bool all_converged = true;
    for (std::size_t run = 0; run < starts.size(); ++run) {
        const std::size_t remaining = cfg.budget - result.evaluations_used;
        if (remaining == 0) {
            all_converged = false;
            break;
        }
        if (cfg.target_rmse > 0.0 && result.payoff <= target_payoff)
            break;
        opt::MinimizeOptions mo;
        mo.budget = remaining / (starts.size() - run);
        if (mo.budget == 0) {
            all_converged = false;
            continue;
        }
        mo.initial_radius = cfg.initial_radius;
        mo.target_value = target_payoff;
        mo.penalty = kDivergencePenalty;
        const opt::MinimizeResult mr = minimizer->minimize(problem, starts[run], mo);

        for (const auto& tp : mr.trace)
            result.trace.push_back(
                {result.evaluations_used + tp.evaluation, std::min(result.payoff, tp.best)});
        result.evaluations_used += mr.evaluations;
        all_converged = all_converged && mr.converged;
        if (mr.value < result.payoff) {
            result.payoff = mr.value;
            result.params = mr.x;
        }
    }
    result.converged = all_converged && result.evaluations_used > 1;
    result.per_state_rmse = per_state_rmse(result.params, shape, datasets, cfg.integration);
    return result;
}

} // namespace fsnn
