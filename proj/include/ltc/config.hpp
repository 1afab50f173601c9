#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltc/bvp1d.hpp"
#include "ltc/error.hpp"
#include "ltc/geometry.hpp"
#include "ltc/io.hpp"
#include "ltc/nonlinearity.hpp"
#include "ltc/strip2d.hpp"

namespace ltc {

/// Parsed INI document: section -> key -> raw value. Keys outside any section go to "".
using Ini = std::map<std::string, std::map<std::string, std::string>>;

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline Ini parse_ini(const std::string& text)
{
    Ini ini;
    std::string section;
    int lineno = 0;
    for (std::string_view line : io::split(text, '\n')) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            ini[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": empty key");
        if (ini[section].count(key)) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": duplicate key " + key);
        ini[section][key] = std::string(trim(line.substr(eq + 1)));
    }
    return ini;
}

struct RunConfig {
    Mode mode = Mode::RampC1;
    std::string chi{cutoff::construction_tag};

    std::size_t m = 4096;
    SolverSettings1D solver1d;
    LambdaStarSettings lambda;
    PairSettings pair;

    ContinuationSettings strip;

    double eps_stag_rel = 1e-5;
    double flow_margin = 2.0;

    /// Empty means the mode default (see witness_alphas()).
    std::vector<double> alphas;
    WitnessSettings witness;
    std::vector<double> level_alphas;
    double stream_step = 5e-3;
    std::size_t stream_max_steps = 8000;
    std::size_t stream_seeds = 9;

    std::string out_dir = "out";
    unsigned threads = 1;

    std::vector<double> witness_alphas() const
    {
        if (!alphas.empty()) return alphas;
        if (mode == Mode::ZeroC0) return {0.25, 0.20, 0.15, 0.10};
        return {};
    }

    std::vector<double> contour_alphas() const
    {
        if (!level_alphas.empty()) return level_alphas;
        if (mode == Mode::ZeroC0) return {0.1, 0.2, 0.25, 0.5, 1.0};
        return {0.25, 0.5, 0.75, 1.0 - 1e-3, 2.0, 5.0};
    }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    if (trim(s).empty()) return out;
    for (std::string_view x : io::split(s, ',')) out.push_back(io::parse_double(trim(x)));
    return out;
}

inline std::string list_text(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + io::fmt(v[k]);
    return s;
}

/// One table drives parsing, echo and validation of every key.
struct Field {
    std::string section, key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field real(const char* sec, const char* key, T RunConfig::*outer, double T::*inner)
{
    return {sec, key, [=](RunConfig& c, const std::string& v) { (c.*outer).*inner = io::parse_double(v); },
            [=](const RunConfig& c) { return io::fmt((c.*outer).*inner); }};
}

inline Field real(const char* sec, const char* key, double RunConfig::*f)
{
    return {sec, key, [=](RunConfig& c, const std::string& v) { c.*f = io::parse_double(v); },
            [=](const RunConfig& c) { return io::fmt(c.*f); }};
}

inline long long parse_int(const std::string& v)
{
    std::size_t pos = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "not an integer: '" + v + "'");
    }
    if (pos != v.size()) throw Error(ErrorKind::Config, "not an integer: '" + v + "'");
    return x;
}

inline const std::vector<Field>& fields()
{
    static const std::vector<Field> f = [] {
        std::vector<Field> t;
        t.push_back({"problem", "mode", [](RunConfig& c, const std::string& v) { c.mode = parse_mode(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.mode)); }});
        t.push_back({"problem", "chi", [](RunConfig& c, const std::string& v) { c.chi = v; },
                     [](const RunConfig& c) { return c.chi; }});
        t.push_back({"bvp1d", "m", [](RunConfig& c, const std::string& v) {
                         const long long x = parse_int(v);
                         if (x < 1) throw Error(ErrorKind::Config, "bvp1d.m must be positive");
                         c.m = static_cast<std::size_t>(x);
                     },
                     [](const RunConfig& c) { return std::to_string(c.m); }});
        t.push_back(real("bvp1d", "tol_residual", &RunConfig::solver1d, &SolverSettings1D::tol_residual));
        t.push_back(real("bvp1d", "tol_step", &RunConfig::solver1d, &SolverSettings1D::tol_step));
        t.push_back({"bvp1d", "max_iter", [](RunConfig& c, const std::string& v) { c.solver1d.max_iter = static_cast<int>(parse_int(v)); },
                     [](const RunConfig& c) { return std::to_string(c.solver1d.max_iter); }});
        t.push_back(real("lambda", "tol_lambda", &RunConfig::lambda, &LambdaStarSettings::tol_lambda));
        t.push_back(real("lambda", "margin", &RunConfig::lambda, &LambdaStarSettings::margin));
        t.push_back({"lambda", "k_min", [](RunConfig& c, const std::string& v) { c.lambda.k_min = static_cast<int>(parse_int(v)); },
                     [](const RunConfig& c) { return std::to_string(c.lambda.k_min); }});
        t.push_back({"lambda", "k_max", [](RunConfig& c, const std::string& v) { c.lambda.k_max = static_cast<int>(parse_int(v)); },
                     [](const RunConfig& c) { return std::to_string(c.lambda.k_max); }});
        t.push_back(real("pair", "tol_energy", &RunConfig::pair, &PairSettings::tol_energy));
        t.push_back(real("pair", "tie_tol", &RunConfig::pair, &PairSettings::tie_tol));
        t.push_back(real("strip", "hx", &RunConfig::strip, &ContinuationSettings::hx));
        t.push_back(real("strip", "hy", &RunConfig::strip, &ContinuationSettings::hy));
        t.push_back({"strip", "L_schedule", [](RunConfig& c, const std::string& v) { c.strip.L_schedule = parse_list(v); },
                     [](const RunConfig& c) { return list_text(c.strip.L_schedule); }});
        t.push_back(real("strip", "tol_cont", &RunConfig::strip, &ContinuationSettings::tol_cont));
        t.push_back(real("strip", "common_window", &RunConfig::strip, &ContinuationSettings::common_window));
        t.push_back(real("strip", "margin", &RunConfig::strip, &ContinuationSettings::margin));
        t.push_back({"strip", "tol_residual", [](RunConfig& c, const std::string& v) { c.strip.solver.tol_residual = io::parse_double(v); },
                     [](const RunConfig& c) { return io::fmt(c.strip.solver.tol_residual); }});
        t.push_back({"strip", "tol_stall", [](RunConfig& c, const std::string& v) { c.strip.solver.tol_stall = io::parse_double(v); },
                     [](const RunConfig& c) { return io::fmt(c.strip.solver.tol_stall); }});
        t.push_back({"strip", "max_newton", [](RunConfig& c, const std::string& v) { c.strip.solver.max_newton = static_cast<int>(parse_int(v)); },
                     [](const RunConfig& c) { return std::to_string(c.strip.solver.max_newton); }});
        t.push_back({"strip", "gs_presweeps", [](RunConfig& c, const std::string& v) { c.strip.solver.gs_presweeps = static_cast<int>(parse_int(v)); },
                     [](const RunConfig& c) { return std::to_string(c.strip.solver.gs_presweeps); }});
        t.push_back(real("flow", "eps_stag_rel", &RunConfig::eps_stag_rel));
        t.push_back(real("flow", "margin", &RunConfig::flow_margin));
        t.push_back({"geometry", "alphas", [](RunConfig& c, const std::string& v) { c.alphas = parse_list(v); },
                     [](const RunConfig& c) { return list_text(c.witness_alphas()); }});
        t.push_back(real("geometry", "tol_wit", &RunConfig::witness, &WitnessSettings::tol));
        t.push_back({"geometry", "budget", [](RunConfig& c, const std::string& v) {
                         const long long x = parse_int(v);
                         if (x < 1) throw Error(ErrorKind::Config, "geometry.budget must be positive");
                         c.witness.budget = static_cast<std::size_t>(x);
                     },
                     [](const RunConfig& c) { return std::to_string(c.witness.budget); }});
        t.push_back({"geometry", "seed", [](RunConfig& c, const std::string& v) { c.witness.seed = std::stoull(v, nullptr, 0); },
                     [](const RunConfig& c) { return "0x" + io::hex64(c.witness.seed); }});
        t.push_back({"geometry", "level_alphas", [](RunConfig& c, const std::string& v) { c.level_alphas = parse_list(v); },
                     [](const RunConfig& c) { return list_text(c.contour_alphas()); }});
        t.push_back(real("geometry", "stream_step", &RunConfig::stream_step));
        t.push_back({"geometry", "stream_max_steps", [](RunConfig& c, const std::string& v) { c.stream_max_steps = static_cast<std::size_t>(parse_int(v)); },
                     [](const RunConfig& c) { return std::to_string(c.stream_max_steps); }});
        t.push_back({"geometry", "stream_seeds", [](RunConfig& c, const std::string& v) { c.stream_seeds = static_cast<std::size_t>(parse_int(v)); },
                     [](const RunConfig& c) { return std::to_string(c.stream_seeds); }});
        t.push_back({"output", "dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
                     [](const RunConfig& c) { return c.out_dir; }});
        t.push_back({"output", "threads", [](RunConfig& c, const std::string& v) {
                         const long long x = parse_int(v);
                         if (x < 1) throw Error(ErrorKind::Config, "output.threads must be >= 1");
                         c.threads = static_cast<unsigned>(x);
                     },
                     [](const RunConfig& c) { return std::to_string(c.threads); }});
        return t;
    }();
    return f;
}

} // namespace detail

/// Throws Config on the first violated constraint.
inline void validate(const RunConfig& c)
{
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw Error(ErrorKind::Config, what);
    };
    need(c.chi == cutoff::construction_tag, "problem.chi: unknown cutoff construction '" + c.chi + "'");
    need(c.m >= 16, "bvp1d.m: need at least 16 nodes per unit");
    need(c.strip.hx > 0.0 && 1.0 / c.strip.hx >= 16.0 - 1e-9, "strip.hx: need at least 16 nodes per unit");
    need(c.strip.hy > 0.0 && 1.0 / c.strip.hy >= 16.0 - 1e-9, "strip.hy: need at least 16 nodes per unit");
    const double cy = 1.0 / c.strip.hy;
    need(std::abs(cy - std::round(cy)) <= 1e-9 * cy, "strip.hy: must divide 1");
    need(!c.strip.L_schedule.empty(), "strip.L_schedule: empty");
    for (std::size_t k = 0; k < c.strip.L_schedule.size(); ++k) {
        const double L = c.strip.L_schedule[k];
        need(L > c.strip.margin, "strip.L_schedule: every L must exceed strip.margin");
        const double cx = 2.0 * L / c.strip.hx;
        need(std::abs(cx - std::round(cx)) <= 1e-9 * cx, "strip.L_schedule: hx must divide 2L");
        if (k) need(L > c.strip.L_schedule[k - 1], "strip.L_schedule: must be strictly increasing");
    }
    need(c.strip.common_window > 0.0 && c.strip.common_window <= c.strip.L_schedule.front(),
         "strip.common_window: must lie in (0, first L]");
    need(c.lambda.k_min < c.lambda.k_max, "lambda.k_min must be below lambda.k_max");
    need(c.solver1d.max_iter > 0 && c.strip.solver.max_newton > 0, "iteration limits must be positive");
    need(c.strip.solver.gs_presweeps >= 0, "strip.gs_presweeps must be nonnegative");
    need(c.stream_seeds > 0 && c.stream_max_steps > 0, "geometry.stream_seeds and stream_max_steps must be positive");
    need(c.threads >= 1, "output.threads must be >= 1");
    need(c.strip.margin >= 0.0 && c.flow_margin >= 0.0, "margins must be nonnegative");
    const std::vector<std::pair<const char*, double>> tols{
        {"bvp1d.tol_residual", c.solver1d.tol_residual}, {"bvp1d.tol_step", c.solver1d.tol_step},
        {"lambda.tol_lambda", c.lambda.tol_lambda},       {"lambda.margin", c.lambda.margin},
        {"pair.tol_energy", c.pair.tol_energy},           {"pair.tie_tol", c.pair.tie_tol},
        {"strip.tol_cont", c.strip.tol_cont},             {"strip.tol_residual", c.strip.solver.tol_residual},
        {"strip.tol_stall", c.strip.solver.tol_stall},    {"flow.eps_stag_rel", c.eps_stag_rel},
        {"geometry.tol_wit", c.witness.tol},              {"geometry.stream_step", c.stream_step}};
    for (const auto& [name, v] : tols) need(v > 0.0 && std::isfinite(v), std::string(name) + ": tolerance must be > 0");
}

inline RunConfig config_from_ini(const Ini& ini)
{
    RunConfig c;
    const auto& fs = detail::fields();
    for (const auto& [sec, kv] : ini)
        for (const auto& [key, val] : kv) {
            const auto it = std::find_if(fs.begin(), fs.end(), [&](const detail::Field& f) { return f.section == sec && f.key == key; });
            if (it == fs.end()) throw Error(ErrorKind::Config, "unknown key " + sec + "." + key);
            try {
                it->set(c, val);
            } catch (const Error& e) {
                throw Error(ErrorKind::Config, sec + "." + key + ": " + e.what());
            } catch (const std::exception& e) {
                throw Error(ErrorKind::Config, sec + "." + key + ": bad value '" + val + "'");
            }
        }
    c.witness.threads = c.threads;
    c.lambda.threads = c.threads;
    return c;
}

inline constexpr const char* out_dir_env = "LTC_OUT_DIR";

/// Defaults, then the file (if any), then the output-directory environment override.
inline RunConfig load_config(const std::optional<std::filesystem::path>& path)
{
    RunConfig c = path ? config_from_ini(parse_ini(io::read_text(*path))) : RunConfig{};
    if (const char* env = std::getenv(out_dir_env); env && *env) c.out_dir = env;
    return c;
}

/// Canonical INI text with every key; parse_ini + config_from_ini restores the config.
inline std::string echo(const RunConfig& c)
{
    std::string s, sec;
    for (const detail::Field& f : detail::fields()) {
        if (f.section != sec) {
            s += (sec.empty() ? "[" : "\n[") + f.section + "]\n";
            sec = f.section;
        }
        s += f.key + " = " + f.get(c) + "\n";
    }
    return s;
}

/// Echo without the output directory and thread count, which do not affect results.
inline std::string numerical_echo(const RunConfig& c)
{
    RunConfig k = c;
    k.out_dir.clear();
    k.threads = 1;
    return echo(k);
}

} // namespace ltc
