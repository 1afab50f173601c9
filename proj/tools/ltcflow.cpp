#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ltc/bvp1d.hpp"
#include "ltc/config.hpp"
#include "ltc/fixtures.hpp"
#include "ltc/geometry.hpp"
#include "ltc/io.hpp"
#include "ltc/pipeline.hpp"

namespace {

using namespace ltc;

struct Global {
    std::string config;
    std::string mode;
    std::string out;
    unsigned threads = 0;
    bool fresh = false;
    bool quiet = false;
};

RunConfig make_config(const Global& g)
{
    RunConfig c = load_config(g.config.empty() ? std::nullopt : std::optional<std::filesystem::path>(g.config));
    if (!g.mode.empty()) c.mode = parse_mode(g.mode);
    if (!g.out.empty()) c.out_dir = g.out;
    if (g.threads) c.threads = g.threads;
    c.lambda.threads = c.threads;
    c.witness.threads = c.threads;
    validate(c);
    return c;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int finish(const PipelineResult& r, const char* section)
{
    if (section && r.report.contains(section)) print_json(r.report[section]);
    if (r.error) {
        std::cerr << "error: " << r.error->what() << "\n";
        return exit_code(r.error->kind());
    }
    return 0;
}

PipelineResult stages(const Global& g, Stage until)
{
    const RunConfig c = make_config(g);
    PipelineOptions o;
    o.until = until;
    o.resume = !g.fresh;
    if (!g.quiet) o.log = [](const std::string& s) { std::cerr << s << "\n"; };
    return run_pipeline(c, o);
}

int cmd_solve1d(const Global& g, double lambda, std::size_t m)
{
    const RunConfig c = make_config(g);
    if (!(lambda >= 0.0)) throw Error(ErrorKind::Config, "--lambda must be >= 0");
    const std::size_t n = m ? m : c.m;
    const GlobalMin1D r = global_min_1d(ProblemSpec{c.mode, lambda}, n, c.solver1d, c.threads);
    json j = {{"mode", to_string(c.mode)},
              {"lambda", lambda},
              {"m", n},
              {"m_lambda", r.m_lambda},
              {"argmin_converged", r.argmin_converged},
              {"argmin_sup", r.argmin.sup_norm()},
              {"basins", r.basins.size()},
              {"nontrivial_basins", r.nontrivial_count()}};
    json b = json::array();
    for (const Basin& x : r.basins) b.push_back({{"energy", x.energy}, {"sup_norm", x.sup_norm}, {"nontrivial", x.nontrivial}});
    j["basin_list"] = b;
    const std::filesystem::path dir(c.out_dir);
    io::write_profile(dir / "solve1d_argmin.csv", r.argmin);
    io::write_text(dir / "solve1d.json", j.dump(2) + "\n");
    std::cout << "m_lambda = " << io::fmt(r.m_lambda) << "\n";
    print_json(j);
    return 0;
}

int cmd_verify_fixture(const std::string& name, int refine)
{
    const FlowField v = fixtures::by_name(name, refine);
    const double eps = default_eps_stag(v);
    const FlowReport fr = verify_flow(v, Mode::RampC1, eps);
    json j = to_json(fr);
    j.erase("sign_pattern_ok");
    j.erase("top_sign_change");
    j["fixture"] = name;
    j["refine"] = refine;
    j["hx"] = v.grid.hx;
    j["hy"] = v.grid.hy;
    print_json(j);
    bool ok = fr.divergence <= 1e-12 && fr.slip <= 1e-8;
    if (name == "shear")
        ok = ok && fr.angle_class == AngleClass::Shear && std::abs(fr.total_curvature_quadrature) <= 1e-10 &&
             std::abs(fr.total_curvature_formula) <= 1e-10;
    else
        ok = ok && fr.angle_class == AngleClass::FullCircle;
    if (!ok) {
        std::cerr << "fixture verification failed\n";
        return 4;
    }
    return 0;
}

int cmd_witness(const Global& g, double alpha)
{
    const RunConfig c = make_config(g);
    const PipelineResult r = stages(g, Stage::Continuation);
    if (r.error) return finish(r, nullptr);
    WitnessSettings ws = c.witness;
    ws.margin = c.strip.margin;
    const Field2D& u = r.state.heteroclinic.field;
    const auto w = find_nonconvexity_witness(u, alpha, ws);
    json j = {{"alpha", alpha}, {"found", w.has_value()}};
    if (w) {
        j["witness"] = to_json(*w);
        j["valid"] = w->validate(u, ws.tol);
    }
    io::write_text(std::filesystem::path(c.out_dir) / ("witness_" + io::fmt(alpha) + ".json"), j.dump(2) + "\n");
    print_json(j);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Least-total-curvature Euler flows on a strip: 1D minimizer pair, 2D heteroclinic, flow verification"};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--config", g.config, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--mode", g.mode, "ramp (RampC1) or zero (ZeroC0)");
    app.add_option("--out", g.out, std::string("output directory (overrides ") + out_dir_env + ")");
    app.add_option("--threads", g.threads, "worker thread cap")->check(CLI::PositiveNumber);
    app.add_flag("--fresh", g.fresh, "ignore existing checkpoints");
    app.add_flag("-q,--quiet", g.quiet, "no progress output");

    double lambda = 0.0;
    std::size_t m = 0;
    auto* solve1d = app.add_subcommand("solve1d", "global 1D minimum at one lambda");
    solve1d->add_option("--lambda", lambda, "lambda >= 0")->required();
    solve1d->add_option("--m", m, "grid cells (default: config)");

    auto* lstar = app.add_subcommand("lambda-star", "lambda scan and bisection");
    auto* solve2d = app.add_subcommand("solve2d", "heteroclinic by continuation in L");
    auto* flow = app.add_subcommand("flow", "velocity and pressure export");

    std::string fixture;
    int refine = 0;
    auto* verify = app.add_subcommand("verify", "flow verification report");
    verify->add_option("--fixture", fixture, "analytic fixture instead of the pipeline flow")
        ->check(CLI::IsMember({"shear", "cellular", "mixed"}));
    verify->add_option("--refine", refine, "fixture refinement level")->check(CLI::Range(0, 6));

    double alpha = 0.25;
    auto* witness = app.add_subcommand("witness", "superlevel non-convexity witness");
    witness->add_option("--alpha", alpha, "level")->required();

    auto* plot = app.add_subcommand("plot-data", "level curves and streamlines");
    auto* report = app.add_subcommand("report", "full pipeline and report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*solve1d) return cmd_solve1d(g, lambda, m);
        if (*lstar) return finish(stages(g, Stage::LambdaStar), "lambda_star");
        if (*solve2d) return finish(stages(g, Stage::Continuation), "continuation");
        if (*flow) return finish(stages(g, Stage::Flow), "flow");
        if (*verify) {
            if (!fixture.empty()) return cmd_verify_fixture(fixture, refine);
            const PipelineResult r = stages(g, Stage::Verify);
            const int code = finish(r, "verify");
            if (code) return code;
            return r.ok ? 0 : 4;
        }
        if (*witness) return cmd_witness(g, alpha);
        if (*plot) return finish(stages(g, Stage::Geometry), "geometry");
        if (*report) {
            const PipelineResult r = stages(g, Stage::Geometry);
            const int code = finish(r, "verdicts");
            if (code) return code;
            return r.ok ? 0 : 4;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
