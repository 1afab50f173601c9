#include <cmath>

#include <gtest/gtest.h>

#include "ltc/bvp1d.hpp"
#include "ltc/strip2d.hpp"

using namespace ltc;

namespace {

constexpr std::size_t kRows = 32;

const MinimizerPair& coarse_pair(Mode mode)
{
    static const MinimizerPair ramp = extract_pair(find_lambda_star(Mode::RampC1, kRows));
    static const MinimizerPair zero = extract_pair(find_lambda_star(Mode::ZeroC0, kRows));
    return mode == Mode::RampC1 ? ramp : zero;
}

ContinuationSettings coarse_settings()
{
    ContinuationSettings cs;
    cs.L_schedule = {4.0, 8.0};
    cs.hx = 1.0 / 8.0;
    cs.hy = 1.0 / kRows;
    cs.common_window = 2.0;
    return cs;
}

const HeteroclinicResult& coarse_heteroclinic(Mode mode)
{
    static const HeteroclinicResult ramp = [] {
        const auto& p = coarse_pair(Mode::RampC1);
        return continuation({Mode::RampC1, p.lambda_star}, p.phi, p.phibar, coarse_settings());
    }();
    static const HeteroclinicResult zero = [] {
        const auto& p = coarse_pair(Mode::ZeroC0);
        return continuation({Mode::ZeroC0, p.lambda_star}, p.phi, p.phibar, coarse_settings());
    }();
    return mode == Mode::RampC1 ? ramp : zero;
}

} // namespace

TEST(StripGrid, Shape)
{
    const StripGrid g = StripGrid::make(4.0, 1.0 / 16.0, 1.0 / 32.0);
    EXPECT_EQ(g.nx, 129u);
    EXPECT_EQ(g.ny, 33u);
    EXPECT_DOUBLE_EQ(g.x1(0), -4.0);
    EXPECT_DOUBLE_EQ(g.x1(128), 4.0);
    EXPECT_DOUBLE_EQ(g.x2(32), 1.0);
    EXPECT_THROW(StripGrid::make(4.0, 0.3, 1.0 / 32.0), Error);
    EXPECT_THROW(StripGrid::make(4.0, 1.0 / 16.0, 0.3), Error);
    EXPECT_THROW(StripGrid::make(-1.0, 1.0 / 16.0, 1.0 / 32.0), Error);
}

TEST(StripGrid, TrustedColumns)
{
    const StripGrid g = StripGrid::make(4.0, 1.0 / 4.0, 1.0 / 8.0);
    const auto [lo, hi] = trusted_columns(g, 2.0);
    EXPECT_DOUBLE_EQ(g.x1(lo), -2.0);
    EXPECT_DOUBLE_EQ(g.x1(hi), 2.0);
    EXPECT_THROW(trusted_columns(g, 5.0), Error);
}

TEST(Energy2D, ColumnIndependentFieldIsScaledProfileEnergy)
{
    const ProblemSpec spec{Mode::RampC1, 0.05};
    Profile1D p = make_profile(kRows, [](double t) { return t + 6.0 * std::sin(3.14159265 * t); });
    p.values.back() = 1.0;
    const StripGrid g = StripGrid::make(3.0, 1.0 / 8.0, 1.0 / kRows);
    Field2D u(g);
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) u(i, j) = p[j];
    EXPECT_NEAR(energy_2d(u, spec, p, p), 2.0 * g.L * energy_1d(p, spec), 1e-12);
}

TEST(Energy2D, TracesEnforced)
{
    const auto& pr = coarse_pair(Mode::RampC1);
    const StripGrid g = StripGrid::make(2.0, 1.0 / 8.0, 1.0 / kRows);
    Field2D u = seed_field(pr.phi, pr.phibar, g);
    const ProblemSpec spec{Mode::RampC1, pr.lambda_star};
    EXPECT_NO_THROW(energy_2d(u, spec, pr.phi, pr.phibar));
    u(3, 0) = 1e-3;
    EXPECT_THROW(energy_2d(u, spec, pr.phi, pr.phibar), Error);
}

TEST(Energy2D, ResidualIsScaledNegativeGradient)
{
    const auto& pr = coarse_pair(Mode::ZeroC0);
    const ProblemSpec spec{Mode::ZeroC0, pr.lambda_star};
    const StripGrid g = StripGrid::make(1.0, 1.0 / 8.0, 1.0 / kRows);
    Field2D u = seed_field(pr.phi, pr.phibar, g);
    for (std::size_t i = 1; i + 1 < g.nx; ++i)
        for (std::size_t j = 1; j + 1 < g.ny; ++j) u(i, j) += 0.3 * std::sin(0.7 * i + 1.3 * j);
    const auto r = residual_2d(u, spec);
    for (auto [i, j] : {std::pair<std::size_t, std::size_t>{3, 5}, {8, 16}, {12, 30}}) {
        Field2D a = u, b = u;
        const double e = 1e-6;
        a(i, j) += e;
        b(i, j) -= e;
        const double grad = (energy_2d_unchecked(a, spec) - energy_2d_unchecked(b, spec)) / (2 * e);
        EXPECT_NEAR(-r[i * g.ny + j] * g.hx * g.hy, grad, 1e-7 * std::max(1.0, std::abs(grad))) << i << "," << j;
    }
}

TEST(Seed, InCorridorWithPinnedTraces)
{
    const auto& pr = coarse_pair(Mode::RampC1);
    const StripGrid g = StripGrid::make(4.0, 1.0 / 8.0, 1.0 / kRows);
    const Field2D u = seed_field(pr.phi, pr.phibar, g);
    EXPECT_TRUE(in_corridor(u, pr.phi, pr.phibar));
    EXPECT_NO_THROW(check_traces(u, pr.phi, pr.phibar, Mode::RampC1));
    Field2D w = u;
    w(5, 5) = pr.phibar[5] + 1.0;
    EXPECT_FALSE(in_corridor(w, pr.phi, pr.phibar));
    EXPECT_TRUE(in_corridor(truncate_corridor(w, pr.phi, pr.phibar), pr.phi, pr.phibar));
}

TEST(Minimize2D, ConvergesAndDescends)
{
    const auto& pr = coarse_pair(Mode::RampC1);
    const ProblemSpec spec{Mode::RampC1, pr.lambda_star};
    const StripGrid g = StripGrid::make(2.0, 1.0 / 8.0, 1.0 / kRows);
    const Minimize2DResult r = minimize_2d(spec, pr.phi, pr.phibar, seed_field(pr.phi, pr.phibar, g));
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(r.corridor_ok);
    EXPECT_LE(r.residual, 1e-8);
    EXPECT_LE(r.energy, r.energy_history.front());
    EXPECT_LE(r.max_energy_increase, 1e-10 * std::max(1.0, std::abs(r.energy)));
    EXPECT_TRUE(in_corridor(r.field, pr.phi, pr.phibar));
    EXPECT_NO_THROW(check_traces(r.field, pr.phi, pr.phibar, Mode::RampC1));
}

TEST(Translate, WholeCellShiftsAreExact)
{
    const auto& pr = coarse_pair(Mode::RampC1);
    const StripGrid g = StripGrid::make(4.0, 1.0 / 8.0, 1.0 / kRows);
    const Field2D u = minimize_2d({Mode::RampC1, pr.lambda_star}, pr.phi, pr.phibar, seed_field(pr.phi, pr.phibar, g)).field;
    const Field2D a = translate_field(u, 3 * g.hx, pr.phi, pr.phibar);
    const Field2D b = shift_cells(u, 3, pr.phi, pr.phibar);
    for (std::size_t i = 1; i + 4 < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
            EXPECT_NEAR(a(i, j), u(i + 3, j), 1e-14);
            EXPECT_EQ(b(i, j), u(i + 3, j));
        }
}

TEST(Translate, CubicReproducesSmoothShift)
{
    const Profile1D phi = make_profile(kRows, [](double) { return 0.0; });
    Profile1D phibar = make_profile(kRows, [](double) { return 10.0; });
    phibar.values.front() = 0.0;
    phibar.values.back() = 0.0;
    const StripGrid g = StripGrid::make(4.0, 1.0 / 16.0, 1.0 / kRows);
    auto fn = [](double x1, double x2) { return (1.0 + std::tanh(x1)) * std::sin(3.14159265358979 * x2); };
    const Field2D u = sample_field(g, fn);
    const double a = 0.37;
    const Field2D t = translate_field(u, a, phi, phibar);
    double err = 0.0;
    for (std::size_t i = 8; i + 16 < g.nx; ++i)
        for (std::size_t j = 1; j + 1 < g.ny; ++j) err = std::max(err, std::abs(t(i, j) - fn(g.x1(i) + a, g.x2(j))));
    EXPECT_LT(err, 5e-6); // cubic interpolation, O(hx^4)
}

TEST(Continuation, RampCoarseGrid)
{
    const auto& h = coarse_heteroclinic(Mode::RampC1);
    EXPECT_TRUE(h.converged);
    EXPECT_LE(h.residual, 1e-8);
    EXPECT_GE(h.min_dx1u, -1e-10);
    EXPECT_GT(h.min_dx1u_window, 0.0);
    ASSERT_EQ(h.steps.size(), 2u);
    EXPECT_TRUE(std::isnan(h.steps[0].window_diff));
    EXPECT_LE(h.steps[1].window_diff, 1e-4);
    EXPECT_LT(std::abs(h.residual_shift), h.field.grid.hx);
    EXPECT_DOUBLE_EQ(h.L, 8.0);
}

TEST(Continuation, ZeroCoarseGrid)
{
    const auto& h = coarse_heteroclinic(Mode::ZeroC0);
    const auto& pr = coarse_pair(Mode::ZeroC0);
    EXPECT_TRUE(h.converged);
    EXPECT_GE(h.min_dx1u, -1e-10);
    EXPECT_TRUE(in_corridor(h.field, pr.phi, pr.phibar));
    // the energy is finite relative to the end states: bounded by the corridor seed energy
    const ProblemSpec spec{Mode::ZeroC0, pr.lambda_star};
    EXPECT_LE(h.energy, energy_2d(seed_field(pr.phi, pr.phibar, h.field.grid), spec, pr.phi, pr.phibar));
}

TEST(Continuation, HamiltonianSpreadShrinksUnderRefinement)
{
    // the discrete conservation defect is O(h^2): halving both spacings should cut it about 4x
    const auto& coarse = coarse_heteroclinic(Mode::RampC1);
    const MinimizerPair fine_pair = tie_pair_on_grid(coarse_pair(Mode::RampC1), 2 * kRows);
    ContinuationSettings cs = coarse_settings();
    cs.hx /= 2;
    cs.hy /= 2;
    const auto fine = continuation({Mode::RampC1, fine_pair.lambda_star}, fine_pair.phi, fine_pair.phibar, cs);
    EXPECT_LT(coarse.hamiltonian_spread, 0.1);
    EXPECT_LT(fine.hamiltonian_spread, coarse.hamiltonian_spread / 3.0);
    EXPECT_NEAR(fine.hamiltonian_mean, fine_pair.threshold, 2.0 * fine.hamiltonian_spread);
}

TEST(Continuation, RejectsBadSchedule)
{
    const auto& pr = coarse_pair(Mode::RampC1);
    ContinuationSettings cs = coarse_settings();
    cs.L_schedule = {8.0, 4.0};
    EXPECT_THROW(continuation({Mode::RampC1, pr.lambda_star}, pr.phi, pr.phibar, cs), Error);
    cs.L_schedule = {};
    EXPECT_THROW(continuation({Mode::RampC1, pr.lambda_star}, pr.phi, pr.phibar, cs), Error);
}

TEST(Hamiltonian, ColumnIndependentProfileGivesItsEnergyDensity)
{
    const auto& pr = coarse_pair(Mode::RampC1);
    const ProblemSpec spec{Mode::RampC1, pr.lambda_star};
    const StripGrid g = StripGrid::make(1.0, 1.0 / 8.0, 1.0 / kRows);
    Field2D u(g);
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) u(i, j) = pr.phibar[j];
    for (double v : hamiltonian_profile(u, spec)) EXPECT_NEAR(v, energy_1d(pr.phibar, spec), 1e-12);
}
