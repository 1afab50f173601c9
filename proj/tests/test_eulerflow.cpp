#include <cmath>

#include <gtest/gtest.h>

#include "ltc/eulerflow.hpp"
#include "ltc/fixtures.hpp"

using namespace ltc;

namespace {

const double pi = std::acos(-1.0);

// Flow with prescribed direction angle theta(x1, x2) and unit speed.
FlowField direction_field(const std::function<double(double, double)>& theta)
{
    FlowField v;
    v.grid = StripGrid::make(1.0, 1.0 / 16.0, 1.0 / 64.0);
    v.margin = 0.0;
    v.v1.resize(v.grid.size());
    v.v2.resize(v.grid.size());
    v.P.assign(v.grid.size(), 0.0);
    for (std::size_t i = 0; i < v.grid.nx; ++i)
        for (std::size_t j = 0; j < v.grid.ny; ++j) {
            const double t = theta(v.grid.x1(i), v.grid.x2(j));
            v.v1[v.idx(i, j)] = std::cos(t);
            v.v2[v.idx(i, j)] = std::sin(t);
        }
    return v;
}

} // namespace

TEST(ToFlow, MatchesAnalyticVelocity)
{
    const StripGrid g = StripGrid::make(2.0, 1.0 / 32.0, 1.0 / 32.0);
    const Field2D u = sample_field(g, [](double x, double y) { return std::sin(x) * y * y; });
    const FlowField v = to_flow(u, [](double s) { return s; }, 0.0);
    double e1 = 0.0, e2 = 0.0, ep = 0.0;
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
            const double x = g.x1(i), y = g.x2(j);
            const double a1 = -2.0 * std::sin(x) * y, a2 = std::cos(x) * y * y;
            const std::size_t k = v.idx(i, j);
            e1 = std::max(e1, std::abs(v.v1[k] - a1));
            e2 = std::max(e2, std::abs(v.v2[k] - a2));
            ep = std::max(ep, std::abs(v.P[k] - (-u(i, j) - 0.5 * (a1 * a1 + a2 * a2))));
        }
    EXPECT_LT(e1, 1e-12); // quadratic in x2: exact
    EXPECT_LT(e2, 1e-3);
    EXPECT_LT(ep, 1e-3);
}

TEST(ToFlow, DivergenceFreeAndNoSlipForAnyWallConstantField)
{
    const StripGrid g = StripGrid::make(3.0, 1.0 / 16.0, 1.0 / 32.0);
    const Field2D u = sample_field(g, [](double x, double y) { return y + std::tanh(x) * std::sin(pi * y) * std::exp(y); });
    const FlowField v = to_flow(u, [](double) { return 0.0; });
    EXPECT_LE(divergence(v), 1e-12);
    EXPECT_LE(slip(v), 1e-12);
}

TEST(Fixtures, ShearIsExact)
{
    const FlowField v = fixtures::shear();
    const double eps = default_eps_stag(v);
    const FlowReport r = verify_flow(v, Mode::RampC1, eps);
    EXPECT_LE(r.euler_residual, 1e-10);
    EXPECT_LE(r.divergence, 1e-12);
    EXPECT_LE(r.slip, 1e-12);
    EXPECT_EQ(r.angle_class, AngleClass::Shear);
    EXPECT_LE(std::abs(r.total_curvature_quadrature), 1e-10);
    EXPECT_LE(std::abs(r.total_curvature_formula), 1e-10);
    EXPECT_NEAR(v.limits.top_plus, -1.0, 1e-12);
    EXPECT_NEAR(v.limits.top_minus, -1.0, 1e-12);
    EXPECT_NEAR(v.limits.bottom_plus, 0.0, 1e-12);
    EXPECT_NEAR(v.limits.bottom_minus, 0.0, 1e-12);
}

TEST(Fixtures, CellularSecondOrderEuler)
{
    double prev = 0.0;
    for (int r = 0; r <= 3; ++r) {
        const FlowField v = fixtures::cellular(r);
        const FlowReport rep = verify_flow(v, Mode::RampC1, default_eps_stag(v));
        EXPECT_LE(rep.divergence, 1e-12);
        EXPECT_LE(rep.slip, 1e-12);
        EXPECT_EQ(rep.angle_class, AngleClass::FullCircle);
        if (r > 0) {
            const double ratio = prev / rep.euler_residual;
            EXPECT_GT(ratio, 3.5) << r;
            EXPECT_LT(ratio, 4.5) << r;
        }
        prev = rep.euler_residual;
    }
}

TEST(Fixtures, CellularVorticityTransportCancels)
{
    // discrete vorticity is a multiple of u itself on this separable field
    for (int r = 0; r <= 2; ++r) EXPECT_LE(vorticity_transport(fixtures::cellular(r)), 1e-9) << r;
}

TEST(Fixtures, MixedVorticityConvergesAtSecondOrder)
{
    std::vector<double> t;
    for (int r = 1; r <= 4; ++r) t.push_back(vorticity_transport(fixtures::mixed(r)));
    for (std::size_t k = 1; k < t.size(); ++k) EXPECT_GT(std::log2(t[k - 1] / t[k]), 1.7) << k;
    EXPECT_GT(std::log2(t[t.size() - 2] / t.back()), 1.9);
}

TEST(Vorticity, MatchesLaplacian)
{
    // omega = d1 v2 - d2 v1 = Laplacian of u
    const StripGrid g = StripGrid::make(2.0, 1.0 / 32.0, 1.0 / 64.0);
    const Field2D u = sample_field(g, [](double x, double y) { return std::cos(x) * std::sin(2.0 * y); });
    const FlowField v = to_flow(u, [](double) { return 0.0; }, 0.0);
    const auto w = vorticity(v);
    double e = 0.0;
    for (std::size_t i = 2; i + 2 < g.nx; ++i)
        for (std::size_t j = 2; j + 2 < g.ny; ++j) e = std::max(e, std::abs(w[v.idx(i, j)] + 5.0 * u(i, j)));
    EXPECT_LT(e, 5e-3);
}

TEST(Curvature, SegmentIntegralIsExactForLinearVelocity)
{
    const double a1 = 1.0, a2 = 0.2, b1 = -0.3, b2 = 1.5, h = 0.1;
    // midpoint quadrature with many points
    const int n = 200000;
    long double s = 0.0L;
    for (int k = 0; k < n; ++k) {
        const double t = (k + 0.5) / n;
        const double w1 = a1 + t * (b1 - a1), w2 = a2 + t * (b2 - a2);
        const double d1 = (b1 - a1) / h, d2 = (b2 - a2) / h;
        const double c = w1 * d2 - w2 * d1;
        s += c * c / (w1 * w1 + w2 * w2);
    }
    EXPECT_NEAR(detail::segment_curvature(a1, a2, b1, b2, h, 1e-12), static_cast<double>(s * h / n), 1e-8);
    EXPECT_EQ(detail::segment_curvature(0.0, 0.0, b1, b2, h, 1e-12), 0.0);
    EXPECT_EQ(detail::segment_curvature(a1, a2, 2 * a1, 2 * a2, h, 1e-12), 0.0);
}

TEST(Curvature, FormulaAndBalancing)
{
    BoundaryLimits b{2.0, -1.0, -3.0, 1.0};
    // pi/4 ((4) - (-1) + (1) - (-9))
    EXPECT_NEAR(curvature_formula(b), 0.25 * pi * 15.0, 1e-12);
    EXPECT_DOUBLE_EQ(balancing_defect(b), (4.0 - 1.0) - (9.0 - 1.0));
    EXPECT_DOUBLE_EQ(relative_balancing_defect(b), 5.0 / 3.75);
    const BoundaryLimits small{0.1, 0.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(relative_balancing_defect(small), 0.01);
}

TEST(Curvature, ConstantFlowHasNone)
{
    const FlowField v = direction_field([](double, double) { return 0.7; });
    EXPECT_EQ(total_curvature(v, 1e-12), 0.0);
}

TEST(Curvature, CircularTurningAcrossRows)
{
    // unit speed turning at rate k in x2: the continuum value is 2 k^2; the
    // linear reconstruction gives k sin(k h) / h per unit of x1
    const double k = 1.3;
    const FlowField v = direction_field([&](double, double y) { return k * y; });
    const double h = v.grid.hy;
    const double total = total_curvature(v, 1e-12);
    EXPECT_NEAR(total, 2.0 * k * std::sin(k * h) / h, 1e-10);
    EXPECT_NEAR(total, 2.0 * k * k, 1e-3);
}

TEST(Angles, Sector)
{
    EXPECT_EQ(angle_sector(1.0, 0.0), 0);
    EXPECT_EQ(angle_sector(0.0, 1.0), 90);
    EXPECT_EQ(angle_sector(-1.0, 0.0), 180);
    EXPECT_EQ(angle_sector(0.0, -1.0), 270);
    EXPECT_EQ(angle_sector(1.0, -1e-3), 359);
    EXPECT_EQ(angle_sector(1.0, -1e-300), 0); // rounds to a full turn
}

TEST(Angles, Classes)
{
    const auto shear = angle_classify(direction_field([](double x, double) { return x > 0 ? 0.0 : pi; }), 1e-12);
    EXPECT_EQ(shear.cls, AngleClass::Shear);

    const auto semi = angle_classify(direction_field([](double, double y) { return pi * y; }), 1e-12);
    EXPECT_EQ(semi.cls, AngleClass::Semicircle);
    EXPECT_EQ(semi.semicircle_start, 0);
    EXPECT_EQ(semi.occupied, 181u);
    EXPECT_EQ(semi.complement_mass, 0u);

    const auto full = angle_classify(direction_field([](double, double y) { return 2.0 * pi * y; }), 1e-12);
    EXPECT_EQ(full.cls, AngleClass::FullCircle);

    const auto arc = angle_classify(direction_field([](double, double y) { return 1.2 * pi * y; }), 1e-12);
    EXPECT_EQ(arc.cls, AngleClass::Inconclusive);
}

TEST(Angles, StagnantNodesIgnored)
{
    FlowField v = direction_field([](double, double y) { return pi * y; });
    for (std::size_t k = 0; k < v.v1.size(); k += 7) {
        v.v1[k] = 0.0;
        v.v2[k] = -1e-14;
    }
    EXPECT_EQ(angle_classify(v, 1e-9).cls, AngleClass::Semicircle);
}

TEST(SignPattern, RampPattern)
{
    FlowField v;
    v.grid = StripGrid::make(4.0, 1.0 / 8.0, 1.0 / 8.0);
    v.margin = 2.0;
    v.v1.assign(v.grid.size(), 0.0);
    v.v2.assign(v.grid.size(), 0.0);
    v.P.assign(v.grid.size(), 0.0);
    for (std::size_t i = 0; i < v.grid.nx; ++i) {
        const double x = v.grid.x1(i);
        v.v1[v.idx(i, v.grid.ny - 1)] = std::tanh(x - 0.3);
        v.v1[v.idx(i, 0)] = -1.0 - 0.5 * (1.0 + std::tanh(x));
    }
    const SignPattern s = boundary_sign_pattern(v, Mode::RampC1);
    EXPECT_TRUE(s.ok);
    EXPECT_EQ(s.top_sign_changes, 1);
    EXPECT_NEAR(s.top_sign_change, 0.3, 0.01);
    EXPECT_LT(s.bottom_max, -1.0);

    v.v1[v.idx(10, 0)] = 0.5;
    EXPECT_FALSE(boundary_sign_pattern(v, Mode::RampC1).ok);
}

TEST(SignPattern, ZeroPattern)
{
    FlowField v;
    v.grid = StripGrid::make(2.0, 1.0 / 8.0, 1.0 / 8.0);
    v.margin = 0.0;
    v.v1.assign(v.grid.size(), 0.0);
    v.v2.assign(v.grid.size(), 0.0);
    v.P.assign(v.grid.size(), 0.0);
    for (std::size_t i = 0; i < v.grid.nx; ++i) {
        v.v1[v.idx(i, v.grid.ny - 1)] = 1.0;
        v.v1[v.idx(i, 0)] = -2.0;
    }
    EXPECT_TRUE(boundary_sign_pattern(v, Mode::ZeroC0).ok);
    v.v1[v.idx(4, v.grid.ny - 1)] = -0.1;
    EXPECT_FALSE(boundary_sign_pattern(v, Mode::ZeroC0).ok);
}

TEST(Limits, WallAveragesOverOuterWindow)
{
    const StripGrid g = StripGrid::make(6.0, 1.0 / 16.0, 1.0 / 16.0);
    const Field2D u = sample_field(g, [](double x, double y) { return -(0.5 + std::tanh(x)) * y * y / 2.0; });
    const FlowField v = to_flow(u, [](double) { return 0.0; }, 2.0);
    // v1 = (0.5 + tanh x) y, exact for the one-sided wall differences
    EXPECT_NEAR(v.limits.top_plus, 1.5, 5e-3);
    EXPECT_NEAR(v.limits.top_minus, -0.5, 5e-3);
    EXPECT_NEAR(v.limits.bottom_plus, 0.0, 1e-12);
    EXPECT_NEAR(v.limits.bottom_minus, 0.0, 1e-12);
}
