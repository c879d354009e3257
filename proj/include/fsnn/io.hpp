#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "dynsys.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "link_score.hpp"
#include "model.hpp"

namespace fsnn::io {

// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

// "a,b,c" -> {a, b, c}
inline StateVector parse_state(std::string_view text) {
    if (text.empty())
        throw InputError("empty state vector");
    StateVector out;
    for (const auto& field : split(text, ','))
        out.push_back(parse_double(field));
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << content;
    if (!out)
        throw InputError("write failed for " + path.string());
}

inline std::vector<std::string> read_lines(const std::string& content) {
    std::vector<std::string> lines;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!line.empty())
            lines.push_back(line);
    }
    return lines;
}

// ---- trajectories --------------------------------------------------------

// Header `time,<state names>`, one row per sample, LF endings.
inline std::string trajectory_to_csv(const Trajectory& traj) {
    std::string out = "time";
    for (const auto& name : traj.state_names)
        out += "," + name;
    out += "\n";
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        out += format_double(traj.time_at(k));
        for (double v : traj.samples[k])
            out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

// Times must be uniformly spaced (relative tolerance 1e-9).
inline Trajectory trajectory_from_csv(const std::string& content) {
    const auto lines = read_lines(content);
    if (lines.empty())
        throw InputError("trajectory table: missing header");
    const auto header = split(lines[0], ',');
    if (header.size() < 2 || header[0] != "time")
        throw InputError("trajectory table: header must be time,<states...>");
    Trajectory traj;
    traj.state_names.assign(header.begin() + 1, header.end());
    std::vector<double> times;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split(lines[i], ',');
        if (fields.size() != header.size())
            throw InputError("trajectory table: row " + std::to_string(i) + " has " + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(header.size()));
        times.push_back(parse_double(fields[0]));
        StateVector row;
        for (std::size_t j = 1; j < fields.size(); ++j)
            row.push_back(parse_double(fields[j]));
        traj.samples.push_back(std::move(row));
    }
    if (traj.samples.empty())
        throw InputError("trajectory table: no rows");
    traj.first_time = times.front();
    traj.sample_interval = times.size() > 1 ? times[1] - times[0] : 1.0;
    if (!(traj.sample_interval > 0.0))
        throw InputError("trajectory table: times must increase");
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - traj.time_at(k)) > 1e-9 * std::max(1.0, std::abs(times[k])))
            throw InputError("trajectory table: times are not uniformly spaced");
    return traj;
}

// ---- model file ----------------------------------------------------------

inline constexpr const char* kModelFormat = "fsnn-model";

inline nlohmann::json model_to_json(const GeneratedModel& m) {
    const ModelShape& shape = m.shape();
    const std::size_t n = shape.n_states();
    nlohmann::json mask = nlohmann::json::array();
    for (std::size_t s = 0; s < n; ++s) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t t = 0; t < n; ++t)
            row.push_back(shape.mask().allowed(s, t));
        mask.push_back(row);
    }
    nlohmann::json j;
    j["format"] = kModelFormat;
    j["version"] = 1;
    j["state_names"] = m.state_names();
    j["activation"] = "tanh";
    j["hidden_layers"] = shape.architecture().hidden_layers;
    j["mask"] = mask;
    j["magnitudes"] = shape.scaling().magnitudes;
    j["parameter_count"] = shape.param_count();
    j["params"] = m.params();
    return j;
}

inline std::string model_to_string(const GeneratedModel& m) { return model_to_json(m).dump(2) + "\n"; }

inline GeneratedModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat)
            throw InputError("model file: unexpected format tag");
        if (j.at("activation").get<std::string>() != "tanh")
            throw InputError("model file: only tanh activation is supported");
        const auto names = j.at("state_names").get<std::vector<std::string>>();
        const std::size_t n = names.size();
        NetworkArchitecture arch{n, j.at("hidden_layers").get<std::vector<std::vector<std::size_t>>>()};
        const auto mask_rows = j.at("mask").get<std::vector<std::vector<bool>>>();
        if (mask_rows.size() != n)
            throw InputError("model file: mask must be n x n");
        AdjacencyMask mask(n, false);
        for (std::size_t s = 0; s < n; ++s) {
            if (mask_rows[s].size() != n)
                throw InputError("model file: mask must be n x n");
            for (std::size_t t = 0; t < n; ++t)
                mask.set(s, t, mask_rows[s][t]);
        }
        ScalingSpec scaling{j.at("magnitudes").get<std::vector<double>>()};
        ModelShape shape(std::move(arch), std::move(mask), std::move(scaling));
        auto params = j.at("params").get<ParameterVector>();
        if (j.contains("parameter_count") && j.at("parameter_count").get<std::size_t>() != params.size())
            throw InputError("model file: parameter_count does not match params");
        return GeneratedModel(std::move(shape), std::move(params), names);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("model file: ") + e.what());
    } catch (const ConfigError& e) {
        throw InputError(std::string("model file: ") + e.what());
    }
}

inline GeneratedModel model_from_string(const std::string& text) {
    try {
        return model_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("model file: ") + e.what());
    }
}

// ---- link scores and edges -----------------------------------------------

// Long format: one row per (time, source, target).
inline std::string link_profile_to_csv(const LinkProfile& prof) {
    std::string out = "time,source,target,raw,normalized\n";
    const std::size_t n = prof.n_states();
    for (std::size_t k = 0; k < prof.times.size(); ++k) {
        const std::string t = format_double(prof.times[k]);
        for (std::size_t target = 0; target < n; ++target)
            for (std::size_t source = 0; source < n; ++source) {
                const auto& p = prof.series(source, target)[k];
                out += t + "," + prof.state_names[source] + "," + prof.state_names[target] + "," +
                       format_double(p.raw) + "," + format_double(p.normalized) + "\n";
            }
    }
    return out;
}

inline LinkProfile link_profile_from_csv(const std::string& content) {
    const auto lines = read_lines(content);
    if (lines.empty() || lines[0] != "time,source,target,raw,normalized")
        throw InputError("link table: header must be time,source,target,raw,normalized");
    struct Row {
        double time;
        std::string source, target;
        LinkScorePoint p;
    };
    std::vector<Row> rows;
    std::vector<std::string> names;
    auto index_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name)
                return i;
        names.push_back(name);
        return names.size() - 1;
    };
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        if (f.size() != 5)
            throw InputError("link table: row " + std::to_string(i) + " must have 5 fields");
        rows.push_back({parse_double(f[0]), f[1], f[2], {parse_double(f[3]), parse_double(f[4])}});
        index_of(f[1]);
        index_of(f[2]);
    }
    if (rows.empty())
        throw InputError("link table: no rows");
    const std::size_t n = names.size();
    if (rows.size() % (n * n) != 0)
        throw InputError("link table: rows do not form a complete source x target grid");
    LinkProfile prof;
    prof.state_names = names;
    const std::size_t steps = rows.size() / (n * n);
    prof.scores.assign(n * n, std::vector<LinkScorePoint>(steps));
    std::vector<std::size_t> filled(n * n, 0);
    for (const auto& r : rows) {
        auto& series = prof.series(index_of(r.source), index_of(r.target));
        auto& count = filled[index_of(r.source) * n + index_of(r.target)];
        if (count >= steps)
            throw InputError("link table: duplicate (time, source, target) rows");
        if (prof.times.size() <= count)
            prof.times.push_back(r.time);
        else if (prof.times[count] != r.time)
            throw InputError("link table: series are not aligned in time");
        series[count++] = r.p;
    }
    return prof;
}

inline std::string edge_report_to_csv(const EdgeReport& rep) {
    std::string out =
        "source,target,present,polarity,mean_normalized,mean_abs_normalized,sign_consistency,unstable\n";
    const std::size_t n = rep.n_states();
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t) {
            const auto& e = rep.edge(s, t);
            out += rep.state_names[s] + "," + rep.state_names[t] + "," + (e.present ? "1" : "0") + "," +
                   std::to_string(e.polarity) + "," + format_double(e.mean_normalized) + "," +
                   format_double(e.mean_abs_normalized) + "," + format_double(e.sign_consistency) + "," +
                   (e.unstable ? "1" : "0") + "\n";
        }
    return out;
}

// ---- Monte Carlo reports -------------------------------------------------

inline std::string runs_to_csv(const MonteCarloReport& rep) {
    std::string out = "run";
    for (const auto& name : rep.state_names)
        out += "," + name + "_init";
    out += ",initial_sum,max_abs_error,failed\n";
    for (std::size_t r = 0; r < rep.runs.size(); ++r) {
        const auto& run = rep.runs[r];
        out += std::to_string(r);
        for (double v : run.initialization)
            out += "," + format_double(v);
        out += "," + format_double(run.initial_sum) + "," + format_double(run.max_abs_error) + "," +
               (run.failed ? "1" : "0") + "\n";
    }
    return out;
}

inline std::string envelope_to_csv(const MonteCarloReport& rep) {
    std::string out = "state,time,q025,q50,q975\n";
    for (const auto& e : rep.envelopes)
        out += rep.state_names[e.state] + "," + format_double(e.time) + "," + format_double(e.q025) + "," +
               format_double(e.q50) + "," + format_double(e.q975) + "\n";
    return out;
}

inline std::string bins_to_csv(const std::vector<SumBin>& bins) {
    std::string out = "sum_lo,sum_hi,count,median_max_abs_error,max_max_abs_error\n";
    for (const auto& b : bins)
        out += format_double(b.lo) + "," + format_double(b.hi) + "," + std::to_string(b.count) + "," +
               format_double(b.median_max_abs_error) + "," + format_double(b.max_max_abs_error) + "\n";
    return out;
}

inline std::string comparison_to_csv(const EdgeReport& truth, const EdgeReport& gen) {
    std::string out = "source,target,truth_present,truth_polarity,generated_present,generated_polarity,agree\n";
    const std::size_t n = truth.n_states();
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t) {
            const auto& a = truth.edge(s, t);
            const auto& b = gen.edge(s, t);
            const bool agree = a.present == b.present && (!a.present || a.polarity == b.polarity);
            out += truth.state_names[s] + "," + truth.state_names[t] + "," + (a.present ? "1" : "0") + "," +
                   std::to_string(a.present ? a.polarity : 0) + "," + (b.present ? "1" : "0") + "," +
                   std::to_string(b.present ? b.polarity : 0) + "," + (agree ? "1" : "0") + "\n";
        }
    return out;
}

inline nlohmann::json comparison_summary(const StructureComparison& c, const std::vector<std::string>& names) {
    nlohmann::json j;
    j["truth_edges"] = c.truth_edges;
    j["generated_edges"] = c.generated_edges;
    j["shared_edges"] = c.shared_edges;
    j["precision"] = c.precision;
    j["recall"] = c.recall;
    j["polarity_accuracy"] = c.polarity_accuracy;
    nlohmann::json dis = nlohmann::json::array();
    for (const auto& d : c.disagreements)
        dis.push_back({{"source", names[d.source]}, {"target", names[d.target]}, {"kind", d.kind}});
    j["disagreements"] = dis;
    return j;
}

} // namespace fsnn::io
