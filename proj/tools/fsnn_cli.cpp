// Command-line driver: generate benchmark data, train a generated model,
// simulate, analyze link scores, run Monte Carlo evaluation and compare
// recovered structures.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <fsnn/config.hpp>
#include <fsnn/dynsys.hpp>
#include <fsnn/evaluation.hpp>
#include <fsnn/ground_truth.hpp>
#include <fsnn/io.hpp>
#include <fsnn/link_score.hpp>
#include <fsnn/model.hpp>
#include <fsnn/training.hpp>

namespace fs = std::filesystem;
using namespace fsnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Options {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string init;
    std::string model_path;
    bool ground_truth = false;
    bool dense = false;
    bool self_check = false;
    std::optional<std::size_t> runs;
    std::string sum_range;
    std::optional<std::size_t> budget;
    std::string optimizer;
    std::optional<double> threshold;
    std::string start_from;
    std::string trace_path;
    std::vector<std::string> inputs;
};

RunConfig load_config(const Options& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig::from_string("{}") : RunConfig::from_string(io::read_file(o.config_path));
    if (o.seed)
        cfg.training.seed = *o.seed;
    if (o.budget)
        cfg.training.budget = *o.budget;
    if (!o.optimizer.empty())
        cfg.training.optimizer = o.optimizer;
    if (o.threshold)
        cfg.edge_threshold = *o.threshold;
    if (o.runs)
        cfg.mc_runs = *o.runs;
    if (!o.sum_range.empty()) {
        const auto parts = io::split(o.sum_range, ':');
        if (parts.size() != 2)
            throw ConfigError("--sum-range expects lo:hi");
        cfg.mc_sum_range = {io::parse_double(parts[0]), io::parse_double(parts[1])};
    }
    cfg.validate();
    return cfg;
}

void require_out(const Options& o) {
    if (o.out.empty())
        throw ConfigError("--out is required");
}

// Exactly one of --model / --ground-truth.
std::optional<GeneratedModel> load_system(const Options& o) {
    if (o.ground_truth == !o.model_path.empty())
        throw ConfigError("give exactly one of --model PATH or --ground-truth");
    if (o.ground_truth)
        return std::nullopt;
    return io::model_from_string(io::read_file(o.model_path));
}

StateVector require_init(const Options& o, std::size_t n) {
    if (o.init.empty())
        throw ConfigError("--init a,b,c is required");
    StateVector init = io::parse_state(o.init);
    if (init.size() != n)
        throw ConfigError("--init needs " + std::to_string(n) + " values");
    return init;
}

int cmd_config(const Options& o) {
    const RunConfig cfg = load_config(o);
    if (o.out.empty())
        std::cout << cfg.to_string();
    else
        io::write_file(o.out, cfg.to_string());
    return kExitOk;
}

int cmd_generate(const Options& o) {
    require_out(o);
    const RunConfig cfg = load_config(o);
    const auto data = generate_training_data(cfg.initializations, cfg.ground_truth, cfg.integration);
    const fs::path dir(o.out);
    nlohmann::json manifest;
    manifest["config"] = cfg.to_json();
    manifest["equilibrium"] = ground_truth_equilibrium(cfg.ground_truth);
    manifest["datasets"] = nlohmann::json::array();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::string name = "init_" + std::to_string(i + 1) + ".csv";
        io::write_file(dir / name, io::trajectory_to_csv(data[i].trajectory));
        manifest["datasets"].push_back({{"file", name}, {"initialization", data[i].initialization}});
    }
    io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
}

// A data file either starts at time 0 (the first row is the initial
// condition) or is listed with its initialization in a sibling
// manifest.json.
TrainingDataset load_dataset(const fs::path& path) {
    Trajectory traj = io::trajectory_from_csv(io::read_file(path));
    if (traj.first_time == 0.0) {
        if (traj.samples.size() < 2)
            throw InputError(path.string() + ": need at least one sample after t0");
        StateVector init = traj.samples.front();
        traj.samples.erase(traj.samples.begin());
        traj.first_time = traj.sample_interval;
        return {std::move(init), std::move(traj)};
    }
    const fs::path manifest_path = path.parent_path() / "manifest.json";
    if (!fs::exists(manifest_path))
        throw InputError(path.string() + ": no t0 row and no manifest.json with its initialization");
    const auto manifest = nlohmann::json::parse(io::read_file(manifest_path));
    for (const auto& entry : manifest.at("datasets"))
        if (entry.at("file").get<std::string>() == path.filename().string())
            return {entry.at("initialization").get<StateVector>(), std::move(traj)};
    throw InputError(path.string() + ": not listed in " + manifest_path.string());
}

int cmd_train(const Options& o) {
    require_out(o);
    if (o.inputs.empty())
        throw ConfigError("train: give at least one data file");
    RunConfig cfg = load_config(o);
    std::vector<TrainingDataset> data;
    std::vector<std::string> names;
    for (const auto& p : o.inputs) {
        data.push_back(load_dataset(p));
        if (names.empty())
            names = data.back().trajectory.state_names;
        else if (names != data.back().trajectory.state_names)
            throw InputError("train: data files have different headers");
    }
    const ModelShape shape = cfg.model_shape();
    if (names.size() != shape.n_states())
        throw InputError("train: data has " + std::to_string(names.size()) + " states, the model " +
                         std::to_string(shape.n_states()));
    for (const auto& w : shape.warnings())
        std::cerr << "warning: " << w << "\n";

    std::vector<ParameterVector> extra;
    if (!o.start_from.empty()) {
        const GeneratedModel start = io::model_from_string(io::read_file(o.start_from));
        if (!(start.shape() == shape))
            throw InputError("train: --start-from model has a different shape");
        extra.push_back(start.params());
    }

    const TrainingResult res = train(cfg.training, data, shape, extra);
    const GeneratedModel model(shape, res.params, names);
    io::write_file(o.out, io::model_to_string(model));

    nlohmann::json summary;
    summary["optimizer"] = res.optimizer;
    summary["seed"] = cfg.training.seed;
    summary["payoff"] = res.payoff;
    summary["per_state_rmse"] = res.per_state_rmse;
    summary["evaluations"] = res.evaluations_used;
    summary["converged"] = res.converged;
    summary["parameter_count"] = shape.param_count();
    io::write_file(o.out + ".summary.json", summary.dump(2) + "\n");

    if (!o.trace_path.empty()) {
        std::string csv = "evaluation,best_payoff\n";
        for (const auto& tp : res.trace)
            csv += std::to_string(tp.evaluation) + "," + io::format_double(tp.best) + "\n";
        io::write_file(o.trace_path, csv);
    }
    return kExitOk;
}

int cmd_simulate(const Options& o) {
    require_out(o);
    const RunConfig cfg = load_config(o);
    const auto model = load_system(o);
    const std::size_t n = model ? model->n_states() : 3;
    const StateVector init = require_init(o, n);
    const auto names = model ? model->state_names() : default_state_names(3);
    Trajectory traj;
    const IntegrateOptions opts{0.0, false, names};
    if (model)
        traj = o.dense ? integrate_dense(*model, init, cfg.integration, names) : integrate(*model, init, cfg.integration, opts);
    else {
        const GroundTruthSystem gt{cfg.ground_truth};
        traj = o.dense ? integrate_dense(gt, init, cfg.integration, names) : integrate(gt, init, cfg.integration, opts);
    }
    io::write_file(o.out, io::trajectory_to_csv(traj));
    return kExitOk;
}

int cmd_analyze(const Options& o) {
    require_out(o);
    const RunConfig cfg = load_config(o);
    const auto model = load_system(o);
    const std::size_t n = model ? model->n_states() : 3;
    const StateVector init = require_init(o, n);
    const auto names = model ? model->state_names() : default_state_names(3);
    LinkProfile prof;
    Trajectory dense;
    if (model) {
        dense = integrate_dense(*model, init, cfg.integration, names);
        prof = link_profile([&](const StateVector& s) { return model->derivs(s); }, dense);
    } else {
        const GroundTruthSystem gt{cfg.ground_truth};
        dense = integrate_dense(gt, init, cfg.integration, names);
        prof = link_profile([&](const StateVector& s) { return ground_truth_derivs(s, gt.params); }, dense);
    }
    const EdgeReport edges = classify_edges(prof, cfg.edge_threshold);
    const fs::path dir(o.out);
    io::write_file(dir / "links.csv", io::link_profile_to_csv(prof));
    io::write_file(dir / "edges.csv", io::edge_report_to_csv(edges));
    io::write_file(dir / "trajectory_dense.csv", io::trajectory_to_csv(dense));
    return kExitOk;
}

int cmd_evaluate(const Options& o) {
    require_out(o);
    const RunConfig cfg = load_config(o);
    const GroundTruthSystem gt{cfg.ground_truth};
    const auto inits = sample_initializations(cfg.mc_runs, cfg.mc_cube_max, cfg.mc_sum_range, 3);
    MonteCarloReport rep;
    if (o.self_check) {
        if (!o.model_path.empty())
            throw ConfigError("--self-check replaces --model");
        rep = monte_carlo(gt, gt, inits, cfg.integration);
    } else {
        if (o.model_path.empty())
            throw ConfigError("evaluate: --model PATH or --self-check is required");
        const GeneratedModel model = io::model_from_string(io::read_file(o.model_path));
        if (model.n_states() != 3)
            throw InputError("evaluate: the benchmark has 3 states");
        rep = monte_carlo(model, gt, inits, cfg.integration, model.state_names());
    }
    const fs::path dir(o.out);
    io::write_file(dir / "runs.csv", io::runs_to_csv(rep));
    io::write_file(dir / "envelope.csv", io::envelope_to_csv(rep));
    io::write_file(dir / "bins.csv", io::bins_to_csv(bin_by_initial_sum(rep.runs, cfg.mc_bin_width, cfg.mc_bin_upper)));
    return kExitOk;
}

int cmd_compare(const Options& o) {
    require_out(o);
    if (o.inputs.size() != 2)
        throw ConfigError("compare: give the ground-truth and generated link tables");
    const RunConfig cfg = load_config(o);
    const LinkProfile truth = io::link_profile_from_csv(io::read_file(o.inputs[0]));
    const LinkProfile gen = io::link_profile_from_csv(io::read_file(o.inputs[1]));
    if (truth.state_names != gen.state_names)
        throw InputError("compare: link tables cover different state sets");
    const EdgeReport a = classify_edges(truth, cfg.edge_threshold);
    const EdgeReport b = classify_edges(gen, cfg.edge_threshold);
    const StructureComparison c = structure_recovery(a, b);
    const fs::path dir(o.out);
    io::write_file(dir / "comparison.csv", io::comparison_to_csv(a, b));
    io::write_file(dir / "summary.json", io::comparison_summary(c, a.state_names).dump(2) + "\n");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback-system neural network toolkit"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o.config_path, "Run configuration (flat JSON)");
        cmd->add_option("--out", o.out, "Output file or directory");
    };
    auto add_system = [&](CLI::App* cmd) {
        cmd->add_option("--model", o.model_path, "Model file");
        cmd->add_flag("--ground-truth", o.ground_truth, "Use the benchmark system");
        cmd->add_option("--init", o.init, "Initial state a,b,c");
    };

    auto* config = app.add_subcommand("config", "Print the normalized configuration");
    add_common(config);
    auto* generate = app.add_subcommand("generate", "Write benchmark training trajectories");
    add_common(generate);
    auto* train_cmd = app.add_subcommand("train", "Fit a generated model to trajectory files");
    add_common(train_cmd);
    train_cmd->add_option("data", o.inputs, "Trajectory tables")->required();
    train_cmd->add_option("--seed", o.seed, "Random seed");
    train_cmd->add_option("--budget", o.budget, "Maximum payoff evaluations");
    train_cmd->add_option("--optimizer", o.optimizer, "trust-region-dfo | fd-levenberg-marquardt | fd-gradient-descent");
    train_cmd->add_option("--start-from", o.start_from, "Also run a restart from this model's parameters");
    train_cmd->add_option("--trace", o.trace_path, "Write the best-so-far trace here");
    auto* simulate = app.add_subcommand("simulate", "Simulate a model or the benchmark");
    add_common(simulate);
    add_system(simulate);
    simulate->add_flag("--dense", o.dense, "Record every solver step including t0");
    auto* analyze = app.add_subcommand("analyze", "Link-score analysis and edge classification");
    add_common(analyze);
    add_system(analyze);
    analyze->add_option("--threshold", o.threshold, "Edge threshold on mean |normalized score|");
    auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo prediction error against the benchmark");
    add_common(evaluate);
    evaluate->add_option("--model", o.model_path, "Model file");
    evaluate->add_flag("--self-check", o.self_check, "Evaluate the benchmark against itself");
    evaluate->add_option("--runs", o.runs, "Number of Sobol initializations");
    evaluate->add_option("--sum-range", o.sum_range, "Accepted initial-sum range lo:hi");
    evaluate->add_option("--seed", o.seed, "Accepted for symmetry; the Sobol stream is fixed");
    auto* compare = app.add_subcommand("compare", "Compare edge structure of two link tables");
    add_common(compare);
    compare->add_option("tables", o.inputs, "Ground-truth and generated link tables")->required();
    compare->add_option("--threshold", o.threshold, "Edge threshold on mean |normalized score|");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*config) return cmd_config(o);
        if (*generate) return cmd_generate(o);
        if (*train_cmd) return cmd_train(o);
        if (*simulate) return cmd_simulate(o);
        if (*analyze) return cmd_analyze(o);
        if (*evaluate) return cmd_evaluate(o);
        if (*compare) return cmd_compare(o);
    } catch (const IntegrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const EvaluationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
