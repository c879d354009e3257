#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dynsys.hpp"
#include "errors.hpp"

namespace fsnn {

// Change in f if only component j had moved from s_prev to s_curr.
template <typename F>
double conditional_delta(F&& f, const StateVector& s_prev, const StateVector& s_curr, std::size_t j) {
    if (s_prev.size() != s_curr.size() || j >= s_prev.size())
        throw InputError("conditional_delta: mismatched states or source index");
    StateVector partial = s_prev;
    partial[j] = s_curr[j];
    return f(partial) - f(s_prev);
}

inline double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Link score of x -> z: magnitude |dxz / dz| with the polarity of dxz / dx.
// Zero whenever z or x did not change.
inline double link_score(double delta_xz, double delta_z, double delta_x) {
    if (delta_z == 0.0 || delta_x == 0.0)
        return 0.0;
    return std::abs(delta_xz / delta_z) * sign_of(delta_xz / delta_x);
}

// Chain-rule composition of link scores along a pathway.
inline double compose_path(std::span<const double> scores) {
    if (scores.empty())
        throw InputError("compose_path: empty pathway");
    double product = 1.0;
    for (double s : scores)
        product *= s;
    return product;
}

struct LinkScorePoint {
    double raw = 0.0;
    double normalized = 0.0;
};

// Source -> target-derivative scores at every solver step. series(s, t)[k]
// covers the step ending at times[k].
struct LinkProfile {
    std::vector<std::string> state_names;
    std::vector<double> times;
    std::vector<std::vector<LinkScorePoint>> scores; // [source * n + target][k]

    std::size_t n_states() const { return state_names.size(); }
    const std::vector<LinkScorePoint>& series(std::size_t source, std::size_t target) const {
        return scores[source * n_states() + target];
    }
    std::vector<LinkScorePoint>& series(std::size_t source, std::size_t target) {
        return scores[source * n_states() + target];
    }
};

// Per-target normalization: raw_j / sum_k |raw_k|, 0 when every raw is 0.
inline void normalize_scores(std::span<LinkScorePoint> incoming) {
    double denom = 0.0;
    for (const auto& p : incoming)
        denom += std::abs(p.raw);
    for (auto& p : incoming)
        p.normalized = denom > 0.0 ? p.raw / denom : 0.0;
}

// `derivs(s)` returns the full derivative vector; each component is one
// target. `dense` must hold step-boundary states.
template <typename Derivs>
LinkProfile link_profile(Derivs&& derivs, const Trajectory& dense) {
    if (dense.samples.size() < 2)
        throw InputError("link_profile: need at least two step-boundary states");
    const std::size_t n = dense.samples.front().size();
    for (const auto& s : dense.samples)
        if (s.size() != n)
            throw InputError("link_profile: ragged trajectory");

    LinkProfile prof;
    prof.state_names = dense.state_names.size() == n ? dense.state_names : default_state_names(n);
    const std::size_t steps = dense.samples.size() - 1;
    prof.scores.assign(n * n, std::vector<LinkScorePoint>(steps));
    prof.times.reserve(steps);

    std::vector<LinkScorePoint> incoming(n);
    StateVector z_prev = derivs(dense.samples[0]);
    for (std::size_t k = 0; k < steps; ++k) {
        const StateVector& prev = dense.samples[k];
        const StateVector& curr = dense.samples[k + 1];
        prof.times.push_back(dense.time_at(k + 1));

        const StateVector z_curr = derivs(curr);
        // conditional[j][i]: change in target i attributable to source j alone
        std::vector<StateVector> conditional(n);
        for (std::size_t j = 0; j < n; ++j) {
            StateVector partial = prev;
            partial[j] = curr[j];
            conditional[j] = derivs(partial);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double dz = z_curr[i] - z_prev[i];
            for (std::size_t j = 0; j < n; ++j)
                incoming[j].raw = link_score(conditional[j][i] - z_prev[i], dz, curr[j] - prev[j]);
            normalize_scores(incoming);
            for (std::size_t j = 0; j < n; ++j)
                prof.series(j, i)[k] = incoming[j];
        }
        z_prev = z_curr;
    }
    return prof;
}

struct EdgeSummary {
    bool present = false;
    int polarity = 0;
    double mean_normalized = 0.0;
    double mean_abs_normalized = 0.0;
    // Fraction of nonzero samples sharing the majority sign.
    double sign_consistency = 0.0;
    bool unstable = false;
};

struct EdgeReport {
    std::vector<std::string> state_names;
    std::vector<EdgeSummary> edges; // [source * n + target]

    std::size_t n_states() const { return state_names.size(); }
    const EdgeSummary& edge(std::size_t source, std::size_t target) const { return edges[source * n_states() + target]; }
    std::size_t edge_count() const {
        std::size_t c = 0;
        for (const auto& e : edges)
            c += e.present ? 1 : 0;
        return c;
    }
};

inline constexpr double kUnstableConsistency = 0.8;

// An edge is present when the time-mean of |normalized| reaches threshold.
inline EdgeReport classify_edges(const LinkProfile& profile, double threshold = 0.05) {
    if (profile.times.empty())
        throw InputError("classify_edges: empty profile");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ConfigError("classify_edges: threshold must lie in (0, 1)");
    const std::size_t n = profile.n_states();
    EdgeReport rep;
    rep.state_names = profile.state_names;
    rep.edges.resize(n * n);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < n; ++t) {
            const auto& series = profile.series(s, t);
            double sum = 0.0, sum_abs = 0.0;
            std::size_t pos = 0, neg = 0;
            for (const auto& p : series) {
                sum += p.normalized;
                sum_abs += std::abs(p.normalized);
                pos += p.normalized > 0.0 ? 1 : 0;
                neg += p.normalized < 0.0 ? 1 : 0;
            }
            EdgeSummary& e = rep.edges[s * n + t];
            const double len = static_cast<double>(series.size());
            e.mean_normalized = sum / len;
            e.mean_abs_normalized = sum_abs / len;
            e.sign_consistency = pos + neg > 0 ? static_cast<double>(std::max(pos, neg)) / static_cast<double>(pos + neg) : 0.0;
            e.present = e.mean_abs_normalized >= threshold;
            e.polarity = static_cast<int>(sign_of(e.mean_normalized));
            if (e.present && e.polarity == 0)
                e.polarity = pos >= neg ? 1 : -1;
            e.unstable = e.present && e.sign_consistency < kUnstableConsistency;
        }
    }
    return rep;
}

} // namespace fsnn
