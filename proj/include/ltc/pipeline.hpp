#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltc/bvp1d.hpp"
#include "ltc/config.hpp"
#include "ltc/error.hpp"
#include "ltc/eulerflow.hpp"
#include "ltc/geometry.hpp"
#include "ltc/io.hpp"
#include "ltc/strip2d.hpp"

namespace ltc {

using json = nlohmann::ordered_json;

inline constexpr const char* artifact_version = "ltcflow-1.0";

/// FNV-1a over version, cutoff construction and the numerical part of the config.
inline std::string artifact_hash(const RunConfig& c)
{
    std::string key = std::string(artifact_version) + "\n" + std::string(cutoff::construction_tag) + "\n" + numerical_echo(c);
    return io::hex64(io::fnv1a(key));
}

enum class Stage { LambdaStar, Pair, StripPair, Continuation, Flow, Verify, Geometry };

inline constexpr std::array<Stage, 7> all_stages{Stage::LambdaStar, Stage::Pair,   Stage::StripPair, Stage::Continuation,
                                                 Stage::Flow,       Stage::Verify, Stage::Geometry};

inline const char* to_string(Stage s)
{
    switch (s) {
    case Stage::LambdaStar: return "lambda_star";
    case Stage::Pair: return "pair";
    case Stage::StripPair: return "strip_pair";
    case Stage::Continuation: return "continuation";
    case Stage::Flow: return "flow";
    case Stage::Verify: return "verify";
    case Stage::Geometry: return "geometry";
    }
    return "?";
}

inline int exit_code(ErrorKind k)
{
    switch (k) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Config:
    case ErrorKind::EmptyLevelSet: return 2;
    case ErrorKind::NonConvergence:
    case ErrorKind::BracketNotFound:
    case ErrorKind::PairNotOrdered:
    case ErrorKind::TargetNotBracketed:
    case ErrorKind::NoConvergenceAcrossL: return 3;
    case ErrorKind::Verification: return 4;
    case ErrorKind::Io: return 1;
    }
    return 1;
}

namespace detail {

inline json num(double x)
{
    if (std::isfinite(x)) return x;
    return nullptr;
}

inline double num(const json& j)
{
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

inline json nums(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

inline std::vector<double> nums(const json& j)
{
    std::vector<double> v;
    for (const json& x : j) v.push_back(num(x));
    return v;
}

inline json point(const Point& p) { return json::array({p.x1, p.x2}); }

} // namespace detail

inline json to_json(const BoundaryLimits& b)
{
    return {{"top_plus", detail::num(b.top_plus)},
            {"top_minus", detail::num(b.top_minus)},
            {"bottom_plus", detail::num(b.bottom_plus)},
            {"bottom_minus", detail::num(b.bottom_minus)}};
}

inline json to_json(const FlowReport& r)
{
    using detail::num;
    return {{"euler_residual", num(r.euler_residual)},
            {"divergence", num(r.divergence)},
            {"slip", num(r.slip)},
            {"vorticity_transport", num(r.vorticity_transport)},
            {"total_curvature_quadrature", num(r.total_curvature_quadrature)},
            {"total_curvature_formula", num(r.total_curvature_formula)},
            {"balancing_defect", num(r.balancing_defect)},
            {"balancing_defect_relative", num(r.balancing_defect_relative)},
            {"eps_stag", num(r.eps_stag)},
            {"angle_class", to_string(r.angle_class)},
            {"angle_occupied", r.angle_occupied},
            {"angle_complement_mass", r.angle_complement_mass},
            {"sign_pattern_ok", r.sign_pattern_ok},
            {"top_sign_change", num(r.top_sign_change)},
            {"limits", to_json(r.limits)}};
}

inline json to_json(const HeteroclinicResult& h)
{
    using detail::num;
    json steps = json::array();
    for (const ContinuationStep& s : h.steps)
        steps.push_back({{"L", s.L},
                         {"a", num(s.a)},
                         {"window_diff", num(s.window_diff)},
                         {"end_gaps", json::array({num(s.end_gaps.first), num(s.end_gaps.second)})},
                         {"iterations", s.iterations},
                         {"residual", num(s.residual)},
                         {"energy", num(s.energy)}});
    return {{"L", h.L},
            {"lambda", h.lambda},
            {"final_shift", num(h.final_shift)},
            {"residual_shift", num(h.residual_shift)},
            {"min_dx1u", num(h.min_dx1u)},
            {"min_dx1u_window", num(h.min_dx1u_window)},
            {"end_gaps", json::array({num(h.end_gaps.first), num(h.end_gaps.second)})},
            {"hamiltonian_spread", num(h.hamiltonian_spread)},
            {"hamiltonian_mean", num(h.hamiltonian_mean)},
            {"residual", num(h.residual)},
            {"energy", num(h.energy)},
            {"converged", h.converged},
            {"steps", steps}};
}

inline HeteroclinicResult heteroclinic_from_json(const json& j, Field2D field)
{
    using detail::num;
    HeteroclinicResult h;
    h.field = std::move(field);
    h.L = j.at("L").get<double>();
    h.lambda = j.at("lambda").get<double>();
    h.final_shift = num(j.at("final_shift"));
    h.residual_shift = num(j.at("residual_shift"));
    h.min_dx1u = num(j.at("min_dx1u"));
    h.min_dx1u_window = num(j.at("min_dx1u_window"));
    h.end_gaps = {num(j.at("end_gaps")[0]), num(j.at("end_gaps")[1])};
    h.hamiltonian_spread = num(j.at("hamiltonian_spread"));
    h.hamiltonian_mean = num(j.at("hamiltonian_mean"));
    h.residual = num(j.at("residual"));
    h.energy = num(j.at("energy"));
    h.converged = j.at("converged").get<bool>();
    for (const json& s : j.at("steps")) {
        ContinuationStep c;
        c.L = s.at("L").get<double>();
        c.a = num(s.at("a"));
        c.window_diff = num(s.at("window_diff"));
        c.end_gaps = {num(s.at("end_gaps")[0]), num(s.at("end_gaps")[1])};
        c.iterations = s.at("iterations").get<int>();
        c.residual = num(s.at("residual"));
        c.energy = num(s.at("energy"));
        h.steps.push_back(c);
    }
    return h;
}

inline json to_json(const ConvexityWitness& w)
{
    return {{"alpha", w.alpha},
            {"p", detail::point(w.p)},
            {"q", detail::point(w.q)},
            {"mid", detail::point(w.mid)},
            {"u_p", w.u_p},
            {"u_q", w.u_q},
            {"u_mid", w.u_mid},
            {"pairs_tested", w.pairs_tested},
            {"directed", w.directed}};
}

/// In-memory products of the stages that later stages consume.
struct PipelineState {
    LambdaStarResult lambda_star;
    MinimizerPair pair;
    MinimizerPair strip_pair;
    HeteroclinicResult heteroclinic;
    FlowField flow;
    Field2D wall_field;
    json sections = json::object();
};

struct PipelineOptions {
    /// Last stage to run (inclusive).
    Stage until = Stage::Geometry;
    bool resume = true;
    std::function<void(const std::string&)> log;
};

struct PipelineResult {
    json report;
    json timings;
    bool ok = false;
    std::vector<std::string> resumed;
    std::optional<Error> error;
    PipelineState state;
};

namespace detail {

inline bool stage_ok(const json& v)
{
    for (const auto& [k, x] : v.items())
        if (x.is_boolean() && !x.get<bool>()) return false;
    return true;
}

class Runner {
public:
    Runner(const RunConfig& c, const PipelineOptions& o) : cfg_(c), opt_(o), dir_(c.out_dir), hash_(artifact_hash(c)) {}

    PipelineResult run()
    {
        validate(cfg_);
        std::filesystem::create_directories(dir_);
        PipelineResult out;
        json timings = json::object();
        bool fresh = !opt_.resume;
        for (Stage s : all_stages) {
            const auto t0 = std::chrono::steady_clock::now();
            bool resumed = false;
            try {
                if (!fresh && try_load(s)) {
                    resumed = true;
                    out.resumed.push_back(to_string(s));
                } else {
                    fresh = true;
                    say(std::string("stage ") + to_string(s));
                    compute(s);
                    save(s);
                }
            } catch (const Error& e) {
                out.error = Error(e.kind(), std::string("stage ") + to_string(s) + ": " + e.what());
                st_.sections["error"] = {{"stage", to_string(s)}, {"kind", ltc::to_string(e.kind())}, {"message", e.what()}};
                break;
            } catch (const std::exception& e) {
                out.error = Error(ErrorKind::Io, std::string("stage ") + to_string(s) + ": " + e.what());
                st_.sections["error"] = {{"stage", to_string(s)}, {"kind", "Io"}, {"message", e.what()}};
                break;
            }
            timings[to_string(s)] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                                     {"resumed", resumed}};
            if (s == opt_.until) break;
        }
        out.report = assemble();
        out.ok = !out.error && out.report["verdicts"].is_object() && stage_ok(out.report["verdicts"]);
        out.timings = timings;
        io::write_text(dir_ / "report.json", out.report.dump(2) + "\n");
        io::write_text(dir_ / "timings.json", timings.dump(2) + "\n");
        out.state = std::move(st_);
        return out;
    }

private:
    const RunConfig& cfg_;
    const PipelineOptions& opt_;
    std::filesystem::path dir_;
    std::string hash_;
    PipelineState st_;

    void say(const std::string& s) const
    {
        if (opt_.log) opt_.log(s);
    }

    std::filesystem::path stage_json(Stage s) const { return dir_ / (std::string(to_string(s)) + ".json"); }

    ProblemSpec strip_spec() const { return ProblemSpec{cfg_.mode, st_.strip_pair.lambda}; }

    void save(Stage s)
    {
        json j = {{"stage", to_string(s)}, {"artifact", hash_}, {"data", st_.sections[to_string(s)]}};
        io::write_text(stage_json(s), j.dump(2) + "\n");
    }

    bool try_load(Stage s)
    {
        const auto path = stage_json(s);
        if (!std::filesystem::exists(path)) return false;
        json j;
        try {
            j = json::parse(io::read_text(path));
        } catch (const json::exception&) {
            return false;
        }
        if (j.value("artifact", std::string()) != hash_) return false;
        try {
            load(s, j.at("data"));
        } catch (const std::exception& e) {
            say(std::string("checkpoint ") + to_string(s) + " unreadable (" + e.what() + "), recomputing");
            return false;
        }
        st_.sections[to_string(s)] = j.at("data");
        say(std::string("stage ") + to_string(s) + " resumed from checkpoint");
        return true;
    }

    // lambda_star

    json lambda_json() const
    {
        const LambdaStarResult& r = st_.lambda_star;
        return {{"m", r.m},          {"threshold", r.threshold},   {"lambda_star", r.lambda_star},         {"lo", r.lo},
                {"hi", r.hi},        {"transitions", r.transitions}, {"bisection_steps", r.bisection_steps}, {"scan_points", r.scan.size()}};
    }

    void compute_lambda()
    {
        LambdaStarSettings s = cfg_.lambda;
        s.threads = cfg_.threads;
        st_.lambda_star = find_lambda_star(cfg_.mode, cfg_.m, s, cfg_.solver1d);
        io::write_lambda_scan(dir_ / "lambda_scan.csv", st_.lambda_star.scan);
        io::write_lambda_scan(dir_ / "lambda_bisection.csv", st_.lambda_star.bisection);
        st_.sections["lambda_star"] = lambda_json();
    }

    void load_lambda(const json& d)
    {
        LambdaStarResult& r = st_.lambda_star;
        r.mode = cfg_.mode;
        r.m = d.at("m").get<std::size_t>();
        r.threshold = d.at("threshold").get<double>();
        r.lambda_star = d.at("lambda_star").get<double>();
        r.lo = d.at("lo").get<double>();
        r.hi = d.at("hi").get<double>();
        r.transitions = d.at("transitions").get<int>();
        r.bisection_steps = d.at("bisection_steps").get<int>();
        r.scan = io::read_lambda_scan(dir_ / "lambda_scan.csv");
        r.bisection = io::read_lambda_scan(dir_ / "lambda_bisection.csv");
    }

    // pair and strip pair

    static json pair_json(const MinimizerPair& p)
    {
        const ProblemSpec spec{p.mode, p.lambda};
        const auto slopes = end_slopes(p.phibar);
        return {{"m", p.phibar.cells()},
                {"lambda_star", p.lambda_star},
                {"lambda", p.lambda},
                {"energy", p.energy},
                {"threshold", p.threshold},
                {"energy_gap", p.energy - p.threshold},
                {"phibar_max", p.phibar.sup_norm()},
                {"first_integral_spread", spread(first_integral(p.phibar, spec))},
                {"end_slopes", json::array({slopes.first, slopes.second})},
                {"cauchy", detail::nums(p.cauchy)},
                {"ambiguous", p.ambiguous},
                {"alternatives", p.alternatives.size()}};
    }

    MinimizerPair load_pair(const json& d, const std::string& stem) const
    {
        MinimizerPair p;
        p.mode = cfg_.mode;
        p.phibar = io::read_profile(dir_ / (stem + "phibar.csv"));
        p.phi = trivial(cfg_.mode, p.phibar.cells());
        p.lambda_star = d.at("lambda_star").get<double>();
        p.lambda = d.at("lambda").get<double>();
        p.energy = d.at("energy").get<double>();
        p.threshold = d.at("threshold").get<double>();
        p.cauchy = detail::nums(d.at("cauchy"));
        p.ambiguous = d.at("ambiguous").get<bool>();
        check_boundary(p.phibar, cfg_.mode);
        return p;
    }

    void compute_pair()
    {
        st_.pair = extract_pair(st_.lambda_star, cfg_.pair, cfg_.solver1d, cfg_.threads, cfg_.lambda.margin);
        io::write_profile(dir_ / "phi.csv", st_.pair.phi);
        io::write_profile(dir_ / "phibar.csv", st_.pair.phibar);
        st_.sections["pair"] = pair_json(st_.pair);
    }

    void compute_strip_pair()
    {
        const std::size_t ny = static_cast<std::size_t>(std::llround(1.0 / cfg_.strip.hy));
        st_.strip_pair = tie_pair_on_grid(st_.pair, ny, cfg_.pair, cfg_.solver1d);
        io::write_profile(dir_ / "strip_phi.csv", st_.strip_pair.phi);
        io::write_profile(dir_ / "strip_phibar.csv", st_.strip_pair.phibar);
        st_.sections["strip_pair"] = pair_json(st_.strip_pair);
    }

    // continuation

    void compute_continuation()
    {
        st_.heteroclinic = continuation(strip_spec(), st_.strip_pair.phi, st_.strip_pair.phibar, cfg_.strip,
                                        [&](const ContinuationStep& s) {
                                            say("  L=" + io::fmt(s.L) + " residual=" + io::fmt(s.residual) +
                                                " window_diff=" + io::fmt(s.window_diff));
                                        });
        io::write_field(dir_ / "field.csv", st_.heteroclinic.field,
                        {{"mode", std::string(to_string(cfg_.mode))}, {"lambda", io::fmt(st_.strip_pair.lambda)}});
        st_.sections["continuation"] = to_json(st_.heteroclinic);
    }

    void load_continuation(const json& d)
    {
        Field2D u = io::read_field(dir_ / "field.csv");
        check_traces(u, st_.strip_pair.phi, st_.strip_pair.phibar, cfg_.mode);
        st_.heteroclinic = heteroclinic_from_json(d, std::move(u));
    }

    // flow

    void compute_flow()
    {
        const ProblemSpec spec = strip_spec();
        st_.flow = to_flow(st_.heteroclinic.field, spec, cfg_.flow_margin);
        const WallNormalization wn =
            wall_normalize(st_.heteroclinic.field, spec, st_.strip_pair.phi, st_.strip_pair.phibar, cfg_.flow_margin);
        st_.wall_field = wn.field;
        io::write_flow(dir_ / "flow.csv", st_.flow);
        st_.sections["flow"] = {{"max_speed", st_.flow.max_speed()},
                                {"limits", to_json(st_.flow.limits)},
                                {"wall_shift_cells", wn.cells},
                                {"top_sign_change_mid_height", detail::num(wn.abscissa_before)},
                                {"top_sign_change_wall_normalized", detail::num(wn.abscissa_after)}};
    }

    void load_flow(const json& d)
    {
        st_.flow = io::read_flow(dir_ / "flow.csv");
        st_.wall_field = shift_cells(st_.heteroclinic.field, d.at("wall_shift_cells").get<long>(), st_.strip_pair.phi,
                                     st_.strip_pair.phibar);
    }

    // verify

    void compute_verify()
    {
        const double eps = cfg_.eps_stag_rel * st_.flow.max_speed();
        const FlowReport fr = verify_flow(st_.flow, cfg_.mode, eps);
        const SignPattern sp = boundary_sign_pattern(to_flow(st_.wall_field, strip_spec(), cfg_.flow_margin), cfg_.mode);
        json v = to_json(fr);
        v["sign_pattern_wall_normalized"] = {{"ok", sp.ok},
                                             {"top_sign_change", detail::num(sp.top_sign_change)},
                                             {"top_sign_changes", sp.top_sign_changes},
                                             {"bottom_max", sp.bottom_max},
                                             {"violations", sp.violations}};
        st_.sections["verify"] = v;
    }

    // geometry

    void compute_geometry()
    {
        const Field2D& u = st_.heteroclinic.field;
        json wit = json::array();
        WitnessSettings ws = cfg_.witness;
        ws.threads = cfg_.threads;
        ws.margin = cfg_.strip.margin;
        for (double a : cfg_.witness_alphas()) {
            const auto w = find_nonconvexity_witness(u, a, ws);
            json e = {{"alpha", a}, {"found", w.has_value()}};
            if (w) {
                e["witness"] = to_json(*w);
                e["valid"] = w->validate(u, ws.tol);
            }
            wit.push_back(e);
        }
        std::vector<Polyline> curves;
        json levels = json::array();
        for (double a : cfg_.contour_alphas()) {
            try {
                const auto c = level_curve(u, a);
                levels.push_back({{"alpha", a}, {"first_id", curves.size()}, {"count", c.size()}});
                curves.insert(curves.end(), c.begin(), c.end());
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::EmptyLevelSet) throw;
                levels.push_back({{"alpha", a}, {"first_id", curves.size()}, {"count", 0}, {"skipped", "outside range"}});
            }
        }
        std::vector<Point> seeds;
        for (std::size_t k = 1; k <= cfg_.stream_seeds; ++k)
            seeds.push_back({0.0, static_cast<double>(k) / static_cast<double>(cfg_.stream_seeds + 1)});
        const auto lines = trace_streamlines(st_.flow, seeds, cfg_.stream_step, cfg_.stream_max_steps,
                                             cfg_.eps_stag_rel * st_.flow.max_speed());
        io::write_polylines(dir_ / "level_curves.csv", curves);
        io::write_polylines(dir_ / "streamlines.csv", lines);
        io::write_text(dir_ / "level_curves.svg", io::polylines_svg(curves, u.grid.L));
        io::write_text(dir_ / "streamlines.svg", io::polylines_svg(lines, u.grid.L));
        st_.sections["geometry"] = {{"witnesses", wit}, {"level_sets", levels}, {"streamlines", lines.size()}};
    }

    void compute(Stage s)
    {
        switch (s) {
        case Stage::LambdaStar: compute_lambda(); break;
        case Stage::Pair: compute_pair(); break;
        case Stage::StripPair: compute_strip_pair(); break;
        case Stage::Continuation: compute_continuation(); break;
        case Stage::Flow: compute_flow(); break;
        case Stage::Verify: compute_verify(); break;
        case Stage::Geometry: compute_geometry(); break;
        }
    }

    void load(Stage s, const json& d)
    {
        switch (s) {
        case Stage::LambdaStar: load_lambda(d); break;
        case Stage::Pair: st_.pair = load_pair(d, ""); break;
        case Stage::StripPair: st_.strip_pair = load_pair(d, "strip_"); break;
        case Stage::Continuation: load_continuation(d); break;
        case Stage::Flow: load_flow(d); break;
        case Stage::Verify:
        case Stage::Geometry: break;
        }
    }

    json verdicts() const
    {
        const json& S = st_.sections;
        json v = json::object();
        if (S.contains("lambda_star")) v["lambda_single_transition"] = S["lambda_star"]["transitions"].get<int>() == 1;
        if (S.contains("continuation")) {
            const HeteroclinicResult& h = st_.heteroclinic;
            v["continuation_converged"] = h.converged;
            v["monotone"] = h.min_dx1u >= -1e-10 && h.min_dx1u_window > 0.0;
            v["end_gaps"] = h.end_gaps.first <= 1e-3 && h.end_gaps.second <= 1e-3;
            v["hamiltonian"] = h.hamiltonian_spread <= 1e-3 && std::abs(h.hamiltonian_mean - energy_threshold(cfg_.mode)) <= 1e-3;
        }
        if (S.contains("verify")) {
            const json& r = S["verify"];
            const double q = detail::num(r["total_curvature_quadrature"]), f = detail::num(r["total_curvature_formula"]);
            v["divergence"] = detail::num(r["divergence"]) <= 1e-12;
            v["slip"] = detail::num(r["slip"]) <= 1e-8;
            v["curvature_identity"] = std::abs(q - f) <= 0.05 * std::abs(f);
            v["balancing_law"] = detail::num(r["balancing_defect_relative"]) <= 0.02;
            v["angle_semicircle"] = r["angle_class"] == "Semicircle";
            const json& sp = r["sign_pattern_wall_normalized"];
            bool sign = sp["ok"].get<bool>();
            if (cfg_.mode == Mode::RampC1)
                sign = sign && std::abs(detail::num(sp["top_sign_change"])) <= cfg_.strip.hx && sp["bottom_max"].get<double>() <= -1.0 + 1e-2;
            v["sign_pattern"] = sign;
        }
        if (S.contains("geometry") && cfg_.mode == Mode::ZeroC0) {
            bool all = true;
            for (const json& w : S["geometry"]["witnesses"]) all = all && w["found"].get<bool>() && w.value("valid", false);
            v["nonconvex_superlevel"] = all;
        }
        return v;
    }

    json assemble() const
    {
        json r;
        r["artifact_version"] = artifact_version;
        r["artifact_hash"] = hash_;
        r["mode"] = to_string(cfg_.mode);
        r["chi"] = cfg_.chi;
        r["config"] = numerical_echo(cfg_);
        for (Stage s : all_stages)
            if (st_.sections.contains(to_string(s))) r[to_string(s)] = st_.sections[to_string(s)];
        r["verdicts"] = verdicts();
        r["error"] = st_.sections.contains("error") ? st_.sections["error"] : json(nullptr);
        return r;
    }
};

} // namespace detail

/// Runs the stages in order up to opts.until, writing a checkpoint after each
/// and reusing checkpoints whose artifact hash matches. Stage failures are
/// recorded in the report's "error" field and returned in `error`.
inline PipelineResult run_pipeline(const RunConfig& cfg, const PipelineOptions& opts = {})
{
    return detail::Runner(cfg, opts).run();
}

} // namespace ltc
