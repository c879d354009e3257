#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dynsys.hpp"
#include "errors.hpp"

namespace fsnn {

// Hidden layer widths for each target state's network. Every node,
// including the single output node, uses tanh.
struct NetworkArchitecture {
    std::size_t n_states = 3;
    std::vector<std::vector<std::size_t>> hidden_layers;

    static NetworkArchitecture uniform(std::size_t n_states, std::vector<std::size_t> hidden = {8, 6, 4}) {
        return {n_states, std::vector<std::vector<std::size_t>>(n_states, std::move(hidden))};
    }

    void validate() const {
        if (n_states == 0)
            throw ConfigError("architecture: n_states must be positive");
        if (hidden_layers.size() != n_states)
            throw ConfigError("architecture: need one hidden-layer list per state");
        for (const auto& h : hidden_layers)
            for (std::size_t w : h)
                if (w == 0)
                    throw ConfigError("architecture: hidden layer widths must be positive");
    }
};

// allowed(source, target): source state feeds target's derivative network.
class AdjacencyMask {
public:
    AdjacencyMask() = default;
    explicit AdjacencyMask(std::size_t n, bool value = true) : n_(n), allowed_(n * n, value ? 1 : 0) {}

    static AdjacencyMask full(std::size_t n) { return AdjacencyMask(n, true); }

    std::size_t size() const { return n_; }
    bool allowed(std::size_t source, std::size_t target) const { return allowed_[source * n_ + target] != 0; }
    void set(std::size_t source, std::size_t target, bool value) { allowed_[source * n_ + target] = value ? 1 : 0; }

    std::vector<std::size_t> sources_of(std::size_t target) const {
        std::vector<std::size_t> out;
        for (std::size_t s = 0; s < n_; ++s)
            if (allowed(s, target))
                out.push_back(s);
        return out;
    }

    bool operator==(const AdjacencyMask&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<char> allowed_;
};

// Inputs are divided by the source's magnitude, the output node is
// multiplied by the target's magnitude.
struct ScalingSpec {
    std::vector<double> magnitudes;

    static ScalingSpec uniform(std::size_t n, double magnitude = 100.0) { return {std::vector<double>(n, magnitude)}; }

    void validate(std::size_t n) const {
        if (magnitudes.size() != n)
            throw ConfigError("scaling: need one magnitude per state");
        for (double m : magnitudes)
            if (!(m > 0.0) || !std::isfinite(m))
                throw ConfigError("scaling: magnitudes must be positive and finite");
    }
};

using ParameterVector = std::vector<double>;

// Dense layer, weights stored output-major: weights[o * inputs + i].
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> biases;
};

// Layer widths of target's network from input through the output node.
inline std::vector<std::size_t> layer_widths(const NetworkArchitecture& arch, const AdjacencyMask& mask,
                                             std::size_t target) {
    std::vector<std::size_t> widths;
    widths.push_back(mask.sources_of(target).size());
    for (std::size_t w : arch.hidden_layers[target])
        widths.push_back(w);
    widths.push_back(1);
    return widths;
}

inline std::size_t target_param_count(const NetworkArchitecture& arch, const AdjacencyMask& mask,
                                      std::size_t target) {
    const auto widths = layer_widths(arch, mask, target);
    std::size_t count = 0;
    for (std::size_t l = 1; l < widths.size(); ++l)
        count += widths[l - 1] * widths[l] + widths[l];
    return count;
}

// Parameter layout: targets in state order; per target, layers from input
// to output; per layer, output-major weights then biases.
inline std::size_t param_count(const NetworkArchitecture& arch, const AdjacencyMask& mask) {
    arch.validate();
    if (mask.size() != arch.n_states)
        throw ConfigError("mask dimensions do not match the architecture");
    std::size_t count = 0;
    for (std::size_t t = 0; t < arch.n_states; ++t)
        count += target_param_count(arch, mask, t);
    return count;
}

inline ParameterVector zero_params(const NetworkArchitecture& arch, const AdjacencyMask& mask) {
    return ParameterVector(param_count(arch, mask), 0.0);
}

// Architecture, mask and scaling; everything about a generated model but
// its parameter values.
class ModelShape {
public:
    ModelShape() = default;
    ModelShape(NetworkArchitecture arch, AdjacencyMask mask, ScalingSpec scaling)
        : arch_(std::move(arch)), mask_(std::move(mask)), scaling_(std::move(scaling)) {
        total_ = fsnn::param_count(arch_, mask_);
        scaling_.validate(arch_.n_states);
        std::size_t offset = 0;
        for (std::size_t t = 0; t < arch_.n_states; ++t) {
            targets_.push_back({mask_.sources_of(t), layer_widths(arch_, mask_, t), offset});
            offset += target_param_count(arch_, mask_, t);
            for (std::size_t w : targets_.back().widths)
                max_width_ = std::max(max_width_, w);
        }
    }

    static ModelShape benchmark_default(std::size_t n = 3) {
        return {NetworkArchitecture::uniform(n), AdjacencyMask::full(n), ScalingSpec::uniform(n)};
    }

    const NetworkArchitecture& architecture() const { return arch_; }
    const AdjacencyMask& mask() const { return mask_; }
    const ScalingSpec& scaling() const { return scaling_; }
    std::size_t n_states() const { return arch_.n_states; }
    std::size_t param_count() const { return total_; }

    struct TargetLayout {
        std::vector<std::size_t> sources;
        std::vector<std::size_t> widths;
        std::size_t offset;
    };
    const TargetLayout& target(std::size_t t) const { return targets_[t]; }
    std::size_t max_width() const { return max_width_; }

    // Targets whose every source is masked reduce to a constant derivative.
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        for (std::size_t t = 0; t < targets_.size(); ++t)
            if (targets_[t].sources.empty())
                out.push_back("target " + std::to_string(t) + " has no allowed sources; its derivative is constant");
        return out;
    }

    // Network output for one target given raw (unscaled) states.
    double evaluate_target(std::size_t t, std::span<const double> params, const StateVector& s,
                           std::vector<double>& a, std::vector<double>& b) const {
        const TargetLayout& lay = targets_[t];
        a.resize(max_width_);
        b.resize(max_width_);
        for (std::size_t k = 0; k < lay.sources.size(); ++k)
            a[k] = s[lay.sources[k]] / scaling_.magnitudes[lay.sources[k]];

        const double* p = params.data() + lay.offset;
        for (std::size_t l = 1; l < lay.widths.size(); ++l) {
            const std::size_t in = lay.widths[l - 1];
            const std::size_t out = lay.widths[l];
            const double* bias = p + in * out;
            for (std::size_t o = 0; o < out; ++o) {
                const double* w = p + o * in;
                double z = bias[o];
                for (std::size_t i = 0; i < in; ++i)
                    z += w[i] * a[i];
                b[o] = std::tanh(z);
            }
            p += in * out + out;
            std::swap(a, b);
        }
        return a[0] * scaling_.magnitudes[t];
    }

    bool operator==(const ModelShape& o) const {
        return arch_.n_states == o.arch_.n_states && arch_.hidden_layers == o.arch_.hidden_layers &&
               mask_ == o.mask_ && scaling_.magnitudes == o.scaling_.magnitudes;
    }

private:
    NetworkArchitecture arch_;
    AdjacencyMask mask_;
    ScalingSpec scaling_;
    std::vector<TargetLayout> targets_;
    std::size_t total_ = 0;
    std::size_t max_width_ = 1;
};

// One derivative network per state variable.
class GeneratedModel {
public:
    GeneratedModel() = default;
    GeneratedModel(ModelShape shape, ParameterVector params, std::vector<std::string> state_names = {})
        : shape_(std::move(shape)), params_(std::move(params)), names_(std::move(state_names)) {
        if (params_.size() != shape_.param_count())
            throw ConfigError("parameter vector has " + std::to_string(params_.size()) + " entries, expected " +
                              std::to_string(shape_.param_count()));
        for (double v : params_)
            if (!std::isfinite(v))
                throw EvaluationError("non-finite model parameter");
        if (names_.empty())
            names_ = default_state_names(shape_.n_states());
        if (names_.size() != shape_.n_states())
            throw ConfigError("state_names size does not match the architecture");
    }

    const ModelShape& shape() const { return shape_; }
    const ParameterVector& params() const { return params_; }
    const std::vector<std::string>& state_names() const { return names_; }
    std::size_t n_states() const { return shape_.n_states(); }

    double derivative(std::size_t target, const StateVector& s) const {
        std::vector<double> a, b;
        return shape_.evaluate_target(target, params_, s, a, b);
    }

    StateVector derivs(const StateVector& s) const {
        const std::size_t n = shape_.n_states();
        if (s.size() != n)
            throw InputError("state has " + std::to_string(s.size()) + " entries, model expects " + std::to_string(n));
        StateVector out(n);
        std::vector<double> a, b;
        for (std::size_t t = 0; t < n; ++t)
            out[t] = shape_.evaluate_target(t, params_, s, a, b);
        return out;
    }

    StateVector operator()(const StateVector& s, double /*t*/) const { return derivs(s); }

private:
    ModelShape shape_;
    ParameterVector params_;
    std::vector<std::string> names_;
};

inline StateVector model_derivs(const GeneratedModel& m, const StateVector& s) { return m.derivs(s); }

// Structured view of the flat parameter vector: [target][layer].
inline std::vector<std::vector<DenseLayer>> unpack_params(const ModelShape& shape, std::span<const double> params) {
    if (params.size() != shape.param_count())
        throw ConfigError("unpack: parameter count mismatch");
    std::vector<std::vector<DenseLayer>> nets(shape.n_states());
    for (std::size_t t = 0; t < shape.n_states(); ++t) {
        const auto& lay = shape.target(t);
        std::size_t off = lay.offset;
        for (std::size_t l = 1; l < lay.widths.size(); ++l) {
            DenseLayer layer;
            layer.inputs = lay.widths[l - 1];
            layer.outputs = lay.widths[l];
            const std::size_t nw = layer.inputs * layer.outputs;
            layer.weights.assign(params.begin() + off, params.begin() + off + nw);
            layer.biases.assign(params.begin() + off + nw, params.begin() + off + nw + layer.outputs);
            off += nw + layer.outputs;
            nets[t].push_back(std::move(layer));
        }
    }
    return nets;
}

inline ParameterVector pack_params(const ModelShape& shape, const std::vector<std::vector<DenseLayer>>& nets) {
    ParameterVector out;
    out.reserve(shape.param_count());
    if (nets.size() != shape.n_states())
        throw ConfigError("pack: one network per target required");
    for (std::size_t t = 0; t < nets.size(); ++t) {
        const auto& widths = shape.target(t).widths;
        if (nets[t].size() + 1 != widths.size())
            throw ConfigError("pack: layer count mismatch");
        for (std::size_t l = 0; l < nets[t].size(); ++l) {
            const DenseLayer& layer = nets[t][l];
            if (layer.inputs != widths[l] || layer.outputs != widths[l + 1] ||
                layer.weights.size() != layer.inputs * layer.outputs || layer.biases.size() != layer.outputs)
                throw ConfigError("pack: layer dimensions mismatch");
            out.insert(out.end(), layer.weights.begin(), layer.weights.end());
            out.insert(out.end(), layer.biases.begin(), layer.biases.end());
        }
    }
    return out;
}

} // namespace fsnn
