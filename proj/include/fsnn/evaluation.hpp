#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dynsys.hpp"
#include "errors.hpp"
#include "link_score.hpp"
#include "sobol.hpp"

namespace fsnn {

struct SumRange {
    double lo = 30.0;
    double hi = 150.0;
};

inline constexpr std::size_t kMaxSobolDraws = 1'000'000;

// Sobol points scaled to [0, cube_max]^dimension, kept when their
// coordinate sum lies in [lo, hi].
inline std::vector<StateVector> sample_initializations(std::size_t n, double cube_max = 150.0, SumRange range = {},
                                                       std::size_t dimension = 3) {
    if (n == 0)
        throw ConfigError("sample_initializations: n must be positive");
    if (!(cube_max > 0.0) || !std::isfinite(cube_max))
        throw ConfigError("sample_initializations: cube_max must be positive");
    const double max_sum = cube_max * static_cast<double>(dimension);
    if (!(range.lo >= 0.0 && range.lo < range.hi && range.hi <= max_sum))
        throw ConfigError("sample_initializations: need 0 <= lo < hi <= dimension * cube_max");

    SobolSampler sampler(dimension);
    std::vector<StateVector> out;
    out.reserve(n);
    std::size_t draws = 0;
    while (out.size() < n) {
        if (++draws > kMaxSobolDraws)
            throw SamplingError("sample_initializations: acceptance region too small, gave up after " +
                                std::to_string(kMaxSobolDraws) + " draws");
        StateVector p = sampler.next();
        double sum = 0.0;
        for (double& v : p) {
            v *= cube_max;
            sum += v;
        }
        if (sum >= range.lo && sum <= range.hi)
            out.push_back(std::move(p));
    }
    return out;
}

inline constexpr double kFailedRunError = 1e18;

struct PredictionRun {
    StateVector initialization;
    double initial_sum = 0.0;
    // error[k][state] = model - truth at sample k.
    std::vector<StateVector> error;
    double max_abs_error = 0.0;
    bool failed = false;
    std::string failure;
};

// Integrates both systems from init with the same settings and differences
// the samples. Integration failures mark the run instead of throwing.
template <typename Model, typename Truth>
PredictionRun prediction_error(const Model& model, const Truth& truth, const StateVector& init,
                               const IntegrationConfig& cfg) {
    cfg.validate();
    PredictionRun run;
    run.initialization = init;
    for (double v : init)
        run.initial_sum += v;
    try {
        const Trajectory m = integrate(model, init, cfg);
        const Trajectory t = integrate(truth, init, cfg);
        run.error.resize(m.size());
        for (std::size_t k = 0; k < m.size(); ++k) {
            run.error[k].resize(init.size());
            for (std::size_t i = 0; i < init.size(); ++i) {
                const double e = m.samples[k][i] - t.samples[k][i];
                run.error[k][i] = e;
                run.max_abs_error = std::max(run.max_abs_error, std::abs(e));
            }
        }
    } catch (const IntegrationError& e) {
        run.failed = true;
        run.failure = e.what();
        run.error.clear();
        run.max_abs_error = kFailedRunError;
    }
    return run;
}

// Linear interpolation between order statistics (Hyndman-Fan type 7).
// `sorted` must be ascending and nonempty.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> values) {
    if (values.empty())
        throw InputError("median of an empty set");
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, 0.5);
}

struct EnvelopePoint {
    double time = 0.0;
    std::size_t state = 0;
    double q025 = 0.0;
    double q50 = 0.0;
    double q975 = 0.0;
};

struct MonteCarloReport {
    std::vector<std::string> state_names;
    std::vector<PredictionRun> runs;
    // One entry per (time, state), time-major; failed runs are excluded.
    std::vector<EnvelopePoint> envelopes;
};

template <typename Model, typename Truth>
MonteCarloReport monte_carlo(const Model& model, const Truth& truth, const std::vector<StateVector>& inits,
                             const IntegrationConfig& cfg, std::vector<std::string> state_names = {}) {
    if (inits.empty())
        throw InputError("monte_carlo: no initializations");
    MonteCarloReport rep;
    const std::size_t n = inits.front().size();
    rep.state_names = state_names.empty() ? default_state_names(n) : std::move(state_names);
    rep.runs.reserve(inits.size());
    for (const auto& init : inits)
        rep.runs.push_back(prediction_error(model, truth, init, cfg));

    const std::size_t samples = cfg.sample_count();
    std::vector<double> column;
    for (std::size_t k = 0; k < samples; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            column.clear();
            for (const auto& run : rep.runs)
                if (!run.failed)
                    column.push_back(run.error[k][i]);
            EnvelopePoint pt;
            pt.time = cfg.sample_interval * static_cast<double>(k + 1);
            pt.state = i;
            if (!column.empty()) {
                std::sort(column.begin(), column.end());
                pt.q025 = quantile_sorted(column, 0.025);
                pt.q50 = quantile_sorted(column, 0.5);
                pt.q975 = quantile_sorted(column, 0.975);
            }
            rep.envelopes.push_back(pt);
        }
    }
    return rep;
}

struct SumBin {
    double lo = 0.0; // exclusive
    double hi = 0.0; // inclusive
    std::size_t count = 0;
    double median_max_abs_error = 0.0;
    double max_max_abs_error = 0.0;
};

// Groups runs by initial-state sum into (lo, lo + width] bins over
// (0, upper]. Empty bins are kept with count 0.
inline std::vector<SumBin> bin_by_initial_sum(const std::vector<PredictionRun>& runs, double width = 30.0,
                                              double upper = 300.0) {
    if (!(width > 0.0) || !(upper > 0.0))
        throw ConfigError("bin_by_initial_sum: width and upper must be positive");
    const auto nbins = static_cast<std::size_t>(std::ceil(upper / width - 1e-12));
    std::vector<SumBin> bins(nbins);
    std::vector<std::vector<double>> values(nbins);
    for (std::size_t b = 0; b < nbins; ++b) {
        bins[b].lo = width * static_cast<double>(b);
        bins[b].hi = std::min(upper, width * static_cast<double>(b + 1));
    }
    for (const auto& run : runs) {
        if (!(run.initial_sum > 0.0) || run.initial_sum > upper)
            continue;
        auto b = static_cast<std::size_t>(std::ceil(run.initial_sum / width)) - 1;
        b = std::min(b, nbins - 1);
        values[b].push_back(run.max_abs_error);
    }
    for (std::size_t b = 0; b < nbins; ++b) {
        bins[b].count = values[b].size();
        if (!values[b].empty()) {
            bins[b].max_max_abs_error = *std::max_element(values[b].begin(), values[b].end());
            bins[b].median_max_abs_error = median(values[b]);
        }
    }
    return bins;
}

struct EdgeDisagreement {
    std::size_t source = 0;
    std::size_t target = 0;
    std::string kind; // "missing", "extra" or "polarity"
};

struct StructureComparison {
    std::size_t truth_edges = 0;
    std::size_t generated_edges = 0;
    std::size_t shared_edges = 0;
    std::size_t polarity_matches = 0;
    double precision = 0.0;
    double recall = 0.0;
    double polarity_accuracy = 0.0;
    std::vector<EdgeDisagreement> disagreements;
};

// Ratios with an empty denominator are 1 when both edge sets are empty and
// 0 otherwise.
inline StructureComparison structure_recovery(const EdgeReport& truth, const EdgeReport& generated) {
    if (truth.state_names != generated.state_names)
        throw InputError("structure_recovery: reports cover different state sets");
    const std::size_t n = truth.n_states();
    StructureComparison c;
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < n; ++t) {
            const EdgeSummary& a = truth.edge(s, t);
            const EdgeSummary& b = generated.edge(s, t);
            c.truth_edges += a.present;
            c.generated_edges += b.present;
            if (a.present && b.present) {
                ++c.shared_edges;
                if (a.polarity == b.polarity)
                    ++c.polarity_matches;
                else
                    c.disagreements.push_back({s, t, "polarity"});
            } else if (a.present) {
                c.disagreements.push_back({s, t, "missing"});
            } else if (b.present) {
                c.disagreements.push_back({s, t, "extra"});
            }
        }
    }
    const bool both_empty = c.truth_edges == 0 && c.generated_edges == 0;
    auto ratio = [&](std::size_t num, std::size_t den) {
        return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : (both_empty ? 1.0 : 0.0);
    };
    c.precision = ratio(c.shared_edges, c.generated_edges);
    c.recall = ratio(c.shared_edges, c.truth_edges);
    c.polarity_accuracy = ratio(c.polarity_matches, c.shared_edges);
    return c;
}

} // namespace fsnn
