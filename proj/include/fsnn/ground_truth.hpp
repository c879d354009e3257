#pragma once

#include <cmath>
#include <vector>

#include "dynsys.hpp"
#include "errors.hpp"

namespace fsnn {

// Three-state benchmark: a chain of first-order delays closed by a
// sigmoid-shaped goal-seeking inflow.
//
//   flow_1 = (g - f(S3)) / t      flow_2 = S1 / t
//   flow_3 = S2 / t               flow_4 = S3 / t
//   dS1 = flow_1 - flow_2   dS2 = flow_2 - flow_3   dS3 = flow_3 - flow_4
struct GroundTruthParams {
    double time_constant = 5.0;
    double goal = 75.0;
    double sigmoid_halfwidth = 40.0;

    void validate() const {
        if (!(time_constant > 0.0) || !(goal > 0.0) || !(sigmoid_halfwidth > 0.0))
            throw ConfigError("ground truth: t, g and sigmoid_halfwidth must be positive");
    }
};

// Increasing sigmoid through (50, 50) spanning (0, 100).
inline double sigmoid_f(double x, const GroundTruthParams& p) {
    return 50.0 * (1.0 + std::tanh((x - 50.0) / p.sigmoid_halfwidth));
}

inline double sigmoid_slope(double x, const GroundTruthParams& p) {
    const double th = std::tanh((x - 50.0) / p.sigmoid_halfwidth);
    return 50.0 / p.sigmoid_halfwidth * (1.0 - th * th);
}

struct GroundTruthFlows {
    double inflow;   // flow_1
    double s1_out;   // flow_2
    double s2_out;   // flow_3
    double s3_out;   // flow_4
};

inline GroundTruthFlows ground_truth_flows(const StateVector& s, const GroundTruthParams& p) {
    return {(p.goal - sigmoid_f(s[2], p)) / p.time_constant, s[0] / p.time_constant, s[1] / p.time_constant,
            s[2] / p.time_constant};
}

inline StateVector ground_truth_derivs(const StateVector& s, const GroundTruthParams& p) {
    if (s.size() != 3)
        throw InputError("ground truth system has exactly 3 states");
    const GroundTruthFlows f = ground_truth_flows(s, p);
    return {f.inflow - f.s1_out, f.s1_out - f.s2_out, f.s2_out - f.s3_out};
}

// jac[target][source] = d(dS_target)/d(S_source).
inline std::vector<std::vector<double>> ground_truth_jacobian(const StateVector& s, const GroundTruthParams& p) {
    const double it = 1.0 / p.time_constant;
    return {{-it, 0.0, -sigmoid_slope(s[2], p) * it}, {it, -it, 0.0}, {0.0, it, -it}};
}

// Callable adapter for the integrator.
struct GroundTruthSystem {
    GroundTruthParams params;

    StateVector operator()(const StateVector& s, double /*t*/) const { return ground_truth_derivs(s, params); }
};

// Root of S + f(S) = g by bisection; every state equals it at equilibrium.
inline double ground_truth_equilibrium(const GroundTruthParams& p, double tol = 1e-10) {
    p.validate();
    // h(S) = S + f(S) - g is strictly increasing; f is in (0, 100).
    double lo = p.goal - 100.0;
    double hi = p.goal;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid + sigmoid_f(mid, p) - p.goal > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

struct TrainingDataset {
    StateVector initialization;
    Trajectory trajectory;
};

inline const std::vector<StateVector>& benchmark_initializations() {
    static const std::vector<StateVector> inits = {{29.0, 96.0, 4.0}, {22.0, 11.0, 78.0}};
    return inits;
}

inline std::vector<TrainingDataset> generate_training_data(const std::vector<StateVector>& inits,
                                                           const GroundTruthParams& p,
                                                           const IntegrationConfig& cfg = {}) {
    p.validate();
    std::vector<TrainingDataset> out;
    out.reserve(inits.size());
    const GroundTruthSystem sys{p};
    for (const auto& init : inits) {
        if (init.size() != 3)
            throw InputError("ground truth initializations must have 3 states");
        out.push_back({init, integrate(sys, init, cfg)});
    }
    return out;
}

} // namespace fsnn
