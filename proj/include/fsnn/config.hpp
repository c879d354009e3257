#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynsys.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "ground_truth.hpp"
#include "model.hpp"
#include "training.hpp"

namespace fsnn {

// Everything a CLI run needs. Serialized as a flat JSON object whose keys
// are the dotted names listed in to_json(); unknown keys are rejected.
struct RunConfig {
    GroundTruthParams ground_truth;
    IntegrationConfig integration;
    std::vector<StateVector> initializations = benchmark_initializations();
    std::vector<std::vector<std::size_t>> hidden_layers = {{8, 6, 4}, {8, 6, 4}, {8, 6, 4}};
    // mask[source][target]
    std::vector<std::vector<bool>> mask = {{true, true, true}, {true, true, true}, {true, true, true}};
    std::vector<double> magnitudes = {100.0, 100.0, 100.0};
    TrainingConfig training;
    double edge_threshold = 0.05;
    std::size_t mc_runs = 100;
    SumRange mc_sum_range;
    double mc_cube_max = 150.0;
    double mc_bin_width = 30.0;
    double mc_bin_upper = 300.0;

    std::size_t n_states() const { return magnitudes.size(); }

    ModelShape model_shape() const {
        const std::size_t n = n_states();
        if (mask.size() != n)
            throw ConfigError("config: model.mask must be n x n");
        AdjacencyMask m(n, false);
        for (std::size_t s = 0; s < n; ++s) {
            if (mask[s].size() != n)
                throw ConfigError("config: model.mask must be n x n");
            for (std::size_t t = 0; t < n; ++t)
                m.set(s, t, mask[s][t]);
        }
        return ModelShape(NetworkArchitecture{n, hidden_layers}, std::move(m), ScalingSpec{magnitudes});
    }

    void validate() const {
        ground_truth.validate();
        integration.validate();
        training.validate();
        model_shape();
        if (!(edge_threshold > 0.0 && edge_threshold < 1.0))
            throw ConfigError("config: analysis.threshold must lie in (0, 1)");
        if (mc_runs == 0)
            throw ConfigError("config: monte_carlo.runs must be positive");
        for (const auto& init : initializations)
            if (init.size() != n_states())
                throw ConfigError("config: every initialization needs one value per state");
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        j["ground_truth.t"] = ground_truth.time_constant;
        j["ground_truth.g"] = ground_truth.goal;
        j["ground_truth.sigmoid_halfwidth"] = ground_truth.sigmoid_halfwidth;
        j["integration.dt"] = integration.dt;
        j["integration.horizon"] = integration.horizon;
        j["integration.sample_interval"] = integration.sample_interval;
        j["data.initializations"] = initializations;
        j["model.hidden_layers"] = hidden_layers;
        j["model.mask"] = mask;
        j["model.magnitudes"] = magnitudes;
        j["training.budget"] = training.budget;
        j["training.bounds"] = training.bounds;
        j["training.seed"] = training.seed;
        j["training.optimizer"] = training.optimizer;
        j["training.restarts"] = training.restarts;
        j["training.init_scale"] = training.init_scale;
        j["training.initial_radius"] = training.initial_radius;
        j["training.target_rmse"] = training.target_rmse;
        j["training.max_dimension"] = training.max_dimension;
        j["analysis.threshold"] = edge_threshold;
        j["monte_carlo.runs"] = mc_runs;
        j["monte_carlo.sum_lo"] = mc_sum_range.lo;
        j["monte_carlo.sum_hi"] = mc_sum_range.hi;
        j["monte_carlo.cube_max"] = mc_cube_max;
        j["monte_carlo.bin_width"] = mc_bin_width;
        j["monte_carlo.bin_upper"] = mc_bin_upper;
        return j;
    }

    std::string to_string() const { return to_json().dump(2) + "\n"; }

    // Missing keys keep their defaults. model.hidden_layers also accepts a
    // single list applied to every target.
    static RunConfig from_json(const nlohmann::json& j) {
        if (!j.is_object())
            throw ConfigError("config: expected a JSON object");
        RunConfig c;
        const nlohmann::json known = c.to_json();
        for (const auto& [key, value] : j.items())
            if (!known.contains(key))
                throw ConfigError("config: unknown key '" + key + "'");
        try {
            auto get = [&](const char* key, auto& field) {
                if (j.contains(key))
                    field = j.at(key).get<std::decay_t<decltype(field)>>();
            };
            get("ground_truth.t", c.ground_truth.time_constant);
            get("ground_truth.g", c.ground_truth.goal);
            get("ground_truth.sigmoid_halfwidth", c.ground_truth.sigmoid_halfwidth);
            get("integration.dt", c.integration.dt);
            get("integration.horizon", c.integration.horizon);
            get("integration.sample_interval", c.integration.sample_interval);
            get("data.initializations", c.initializations);
            get("model.mask", c.mask);
            get("model.magnitudes", c.magnitudes);
            if (j.contains("model.hidden_layers")) {
                const auto& h = j.at("model.hidden_layers");
                if (!h.empty() && h.front().is_number())
                    c.hidden_layers.assign(c.magnitudes.size(), h.get<std::vector<std::size_t>>());
                else
                    c.hidden_layers = h.get<std::vector<std::vector<std::size_t>>>();
            } else {
                c.hidden_layers.assign(c.magnitudes.size(), {8, 6, 4});
            }
            if (!j.contains("model.mask"))
                c.mask.assign(c.magnitudes.size(), std::vector<bool>(c.magnitudes.size(), true));
            get("training.budget", c.training.budget);
            get("training.bounds", c.training.bounds);
            get("training.seed", c.training.seed);
            get("training.optimizer", c.training.optimizer);
            get("training.restarts", c.training.restarts);
            get("training.init_scale", c.training.init_scale);
            get("training.initial_radius", c.training.initial_radius);
            get("training.target_rmse", c.training.target_rmse);
            get("training.max_dimension", c.training.max_dimension);
            get("analysis.threshold", c.edge_threshold);
            get("monte_carlo.runs", c.mc_runs);
            get("monte_carlo.sum_lo", c.mc_sum_range.lo);
            get("monte_carlo.sum_hi", c.mc_sum_range.hi);
            get("monte_carlo.cube_max", c.mc_cube_max);
            get("monte_carlo.bin_width", c.mc_bin_width);
            get("monte_carlo.bin_upper", c.mc_bin_upper);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        c.training.integration = c.integration;
        c.validate();
        return c;
    }

    static RunConfig from_string(const std::string& text) {
        try {
            return from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }
};

} // namespace fsnn
