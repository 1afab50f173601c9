#include <cmath>

#include <gtest/gtest.h>

#include "ltc/fixtures.hpp"
#include "ltc/geometry.hpp"
#include "oracles.hpp"

using namespace ltc;

namespace {

const double pi = std::acos(-1.0);

// Monotone in x1 with superlevel sets bounded below by x2 = alpha - c tanh(x1);
// the boundary bends both ways, so these sets are not convex for c > 0.
Field2D tanh_field(double c, double hx = 1.0 / 8.0, double hy = 1.0 / 16.0)
{
    return sample_field(StripGrid::make(4.0, hx, hy), [c](double x, double y) { return y + c * std::tanh(x); });
}

} // namespace

TEST(Bilinear, ReproducesBilinearFunctions)
{
    const StripGrid g = StripGrid::make(2.0, 0.25, 0.125);
    auto fn = [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y + 0.5 * x * y; };
    const Field2D u = sample_field(g, fn);
    for (double x = -2.0; x <= 2.0; x += 0.173)
        for (double y = 0.0; y <= 1.0; y += 0.0917) EXPECT_NEAR(bilinear(u, x, y), fn(x, y), 1e-12);
    EXPECT_NEAR(bilinear(u, 5.0, 0.5), fn(2.0, 0.5), 1e-12); // clamped
}

TEST(LevelCurve, HorizontalLine)
{
    const Field2D u = sample_field(StripGrid::make(3.0, 0.25, 0.125), [](double, double y) { return y; });
    const auto curves = level_curve(u, 0.4);
    ASSERT_EQ(curves.size(), 1u);
    EXPECT_FALSE(curves[0].closed);
    double xmin = 1e9, xmax = -1e9;
    for (const Point& p : curves[0].points) {
        EXPECT_NEAR(p.x2, 0.4, 1e-12);
        xmin = std::min(xmin, p.x1);
        xmax = std::max(xmax, p.x1);
    }
    EXPECT_DOUBLE_EQ(xmin, -3.0);
    EXPECT_DOUBLE_EQ(xmax, 3.0);
}

TEST(LevelCurve, ClosedLoopAroundBump)
{
    const Field2D u = sample_field(StripGrid::make(1.0, 1.0 / 32.0, 1.0 / 32.0),
                                   [](double x, double y) { return std::exp(-(x * x + (y - 0.5) * (y - 0.5)) / 0.05); });
    const auto curves = level_curve(u, 0.5);
    ASSERT_EQ(curves.size(), 1u);
    EXPECT_TRUE(curves[0].closed);
    const double r = std::sqrt(0.05 * std::log(2.0));
    for (const Point& p : curves[0].points) {
        EXPECT_NEAR(bilinear(u, p.x1, p.x2), 0.5, 1e-12);
        EXPECT_NEAR(std::hypot(p.x1, p.x2 - 0.5), r, 5e-3);
    }
}

TEST(LevelCurve, PointsOnInterpolantLevel)
{
    const Field2D u = tanh_field(0.3);
    for (double a : {0.1, 0.5, 0.9}) {
        const auto curves = level_curve(u, a);
        ASSERT_EQ(curves.size(), 1u) << a;
        for (const Point& p : curves[0].points) EXPECT_NEAR(bilinear(u, p.x1, p.x2), a, 1e-12);
    }
}

TEST(LevelCurve, EmptyLevelSetThrows)
{
    const Field2D u = sample_field(StripGrid::make(1.0, 0.25, 0.25), [](double, double y) { return y; });
    try {
        level_curve(u, 2.0);
        FAIL() << "expected EmptyLevelSet";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyLevelSet);
    }
    EXPECT_THROW(level_curve(u, -0.5), Error);
}

TEST(LevelCurve, Deterministic)
{
    const Field2D u = sample_field(StripGrid::make(2.0, 1.0 / 16.0, 1.0 / 16.0),
                                   [](double x, double y) { return std::sin(3.0 * x) * std::sin(pi * y) + 0.2 * y; });
    const auto a = level_curve(u, 0.1), b = level_curve(u, 0.1);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].closed, b[k].closed);
        EXPECT_EQ(a[k].points, b[k].points);
    }
}

TEST(Witness, NoneForHalfPlanes)
{
    const Field2D u = sample_field(StripGrid::make(4.0, 1.0 / 8.0, 1.0 / 16.0), [](double, double y) { return y; });
    for (double a : {0.2, 0.5, 0.8}) {
        EXPECT_FALSE(find_nonconvexity_witness(u, a).has_value()) << a;
        EXPECT_FALSE(oracle::nonconvex_bruteforce(u, a, 1e-4, 1, 2.0)) << a;
    }
}

TEST(Witness, NoneForConvexSuperlevelSets)
{
    // superlevel sets of a concave function are convex
    const Field2D u = sample_field(StripGrid::make(4.0, 1.0 / 8.0, 1.0 / 16.0),
                                   [](double x, double y) { return 1.0 - 0.05 * x * x - (y - 0.5) * (y - 0.5); });
    for (double a : {0.6, 0.8, 0.9}) EXPECT_FALSE(find_nonconvexity_witness(u, a).has_value()) << a;
}

TEST(Witness, FoundAndValidWhenBoundaryBends)
{
    const Field2D u = tanh_field(0.3);
    WitnessSettings s;
    for (double a : {0.35, 0.5, 0.65}) {
        const auto w = find_nonconvexity_witness(u, a, s);
        ASSERT_TRUE(w.has_value()) << a;
        EXPECT_TRUE(w->validate(u, s.tol));
        EXPECT_TRUE(w->directed);
        EXPECT_GE(w->u_p, a + s.tol);
        EXPECT_GE(w->u_q, a + s.tol);
        EXPECT_LE(w->u_mid, a - s.tol);
        EXPECT_NEAR(w->mid.x1, 0.5 * (w->p.x1 + w->q.x1), 1e-12);
    }
}

TEST(Witness, AgreesWithBruteForce)
{
    for (double c : {0.0, 0.05, 0.2, 0.4})
        for (double a : {0.3, 0.5, 0.7}) {
            const Field2D u = tanh_field(c);
            const bool found = find_nonconvexity_witness(u, a).has_value();
            EXPECT_EQ(found, oracle::nonconvex_bruteforce(u, a, 1e-4, 1, 2.0)) << "c=" << c << " a=" << a;
        }
}

TEST(Witness, ValidationRejectsTamperedWitness)
{
    const Field2D u = tanh_field(0.3);
    auto w = find_nonconvexity_witness(u, 0.5);
    ASSERT_TRUE(w.has_value());
    ConvexityWitness bad = *w;
    bad.mid.x1 += 0.1;
    EXPECT_FALSE(bad.validate(u, 1e-4));
    bad = *w;
    bad.alpha = 10.0;
    EXPECT_FALSE(bad.validate(u, 1e-4));
}

TEST(Witness, DeterministicAcrossThreads)
{
    const Field2D u = tanh_field(0.25, 1.0 / 16.0, 1.0 / 32.0);
    WitnessSettings s1, s3;
    s3.threads = 3;
    const auto a = find_nonconvexity_witness(u, 0.5, s1), b = find_nonconvexity_witness(u, 0.5, s3);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->p, b->p);
    EXPECT_EQ(a->q, b->q);
    EXPECT_EQ(a->pairs_tested, b->pairs_tested);
}

TEST(Streamlines, ShearIsHorizontal)
{
    const FlowField v = fixtures::shear();
    const auto lines = trace_streamlines(v, {{3.0, 0.5}, {0.0, 0.25}}, 0.01);
    ASSERT_EQ(lines.size(), 2u);
    for (const Polyline& pl : lines) {
        ASSERT_GT(pl.points.size(), 10u);
        for (const Point& p : pl.points) EXPECT_NEAR(p.x2, pl.points.front().x2, 1e-12);
        // v1 = -x2 < 0: moves left until it would leave the strip
        EXPECT_LT(pl.points.back().x1, pl.points.front().x1);
        EXPECT_GE(pl.points.back().x1, -v.grid.L);
        EXPECT_LT(pl.points.back().x1, -v.grid.L + 0.01 * 0.5 + 1e-9);
    }
}

TEST(Streamlines, StreamFunctionConserved)
{
    const FlowField v = fixtures::cellular(2);
    const auto lines = trace_streamlines(v, {{0.4, 0.5}, {-1.0, 0.3}}, 2e-3, 2000);
    for (const Polyline& pl : lines) {
        ASSERT_GT(pl.points.size(), 100u);
        auto u = [](const Point& p) { return std::sin(p.x1) * std::sin(pi * p.x2); };
        for (const Point& p : pl.points) EXPECT_NEAR(u(p), u(pl.points.front()), 5e-3);
    }
}

TEST(Streamlines, StopsAtStagnationAndOutside)
{
    FlowField v = fixtures::shear();
    std::fill(v.v1.begin(), v.v1.end(), 0.0);
    const auto lines = trace_streamlines(v, {{0.0, 0.5}, {9.0, 0.5}}, 0.01, 100, 1e-12);
    EXPECT_EQ(lines[0].points.size(), 1u);
    EXPECT_TRUE(lines[1].points.empty());
    EXPECT_THROW(trace_streamlines(v, {{0.0, 0.5}}, 0.0), Error);
}
