#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ltc/nonlinearity.hpp"
#include "oracles.hpp"

using namespace ltc;

TEST(Chi, DeadZoneAndLinearTail)
{
    EXPECT_EQ(chi(0.5), 0.0);
    EXPECT_EQ(chi(1.0), 0.0);
    EXPECT_EQ(chi(-3.0), 0.0);
    EXPECT_EQ(chi(3.0), 2.0);
    EXPECT_EQ(chi_prime(0.3), 0.0);
    EXPECT_EQ(chi_prime(2.5), 1.0);
}

TEST(Chi, MidTransitionWithinBounds)
{
    const double c = chi(1.5);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 0.5);
    EXPECT_NEAR(c, static_cast<double>(oracle::chi(1.5L)), 1e-15);
    EXPECT_NEAR(c, 0.25, 1e-15); // symmetric blend weight 1/2 at the midpoint
}

TEST(Chi, MatchesReferenceBlend)
{
    for (double s = -1.0; s <= 4.0; s += 0.0137)
        EXPECT_NEAR(chi(s), static_cast<double>(oracle::chi(s)), 1e-14 * std::max(1.0, s)) << "s=" << s;
}

TEST(Chi, SandwichBounds)
{
    for (double s = 1.0; s <= 10.0; s += 0.001) {
        EXPECT_LE(chi(s), s - 1.0 + 1e-15) << s;
        EXPECT_GE(chi(s), s - 2.0 - 1e-15) << s;
        EXPECT_GE(chi(s), 0.0) << s;
    }
}

TEST(Chi, StrictlyIncreasingAboveOne)
{
    // below 1.002 exp(-1/(s-1)) underflows in double
    for (double s = 1.002; s <= 10.0; s += 0.001) EXPECT_GT(chi_prime(s), 0.0) << s;
    double prev = chi(1.0);
    for (double s = 1.01; s <= 3.0; s += 0.01) {
        EXPECT_GT(chi(s), prev);
        prev = chi(s);
    }
}

TEST(Chi, DerivativesMatchFiniteDifferences)
{
    auto c = [](long double s) { return oracle::chi(s); };
    auto cp = [](long double s) { return static_cast<long double>(chi_prime(static_cast<double>(s))); };
    for (double s = 1.05; s < 1.95; s += 0.01) {
        EXPECT_NEAR(chi_prime(s), static_cast<double>(oracle::d1(c, s, 1e-4L)), 1e-8) << s;
        EXPECT_NEAR(chi_second(s), static_cast<double>(oracle::d1(cp, s, 1e-4L)), 1e-6) << s;
    }
}

TEST(Chi, HigherDifferencesBounded)
{
    // scaled fourth differences settle under refinement when the fourth derivative is bounded
    std::vector<double> worst;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
        double w = 0.0;
        for (double s = 0.0; s <= 10.0; s += 0.0005) {
            const double d4 = chi(s + 2 * h) - 4 * chi(s + h) + 6 * chi(s) - 4 * chi(s - h) + chi(s - 2 * h);
            w = std::max(w, std::abs(d4) / std::pow(h, 4));
        }
        worst.push_back(w);
    }
    const double c1 = std::abs(worst[1] - worst[0]), c2 = std::abs(worst[2] - worst[1]);
    EXPECT_LT(c2, c1);
    EXPECT_LT(c2, 0.02 * worst[2]) << worst[0] << " " << worst[1] << " " << worst[2];
}

TEST(Potential, RampBelowOneIsZero)
{
    EXPECT_EQ(F(0.5, {Mode::RampC1, 7.0}), 0.0);
    EXPECT_EQ(f(0.9, {Mode::RampC1, 7.0}), 0.0);
}

TEST(Potential, ZeroModeAddsLinearForcing)
{
    EXPECT_DOUBLE_EQ(F(0.5, {Mode::ZeroC0, 7.0}), 1.0);
    EXPECT_DOUBLE_EQ(f(0.5, {Mode::ZeroC0, 7.0}), 2.0);
    EXPECT_DOUBLE_EQ(F(3.0, {Mode::ZeroC0, 0.5}), 6.0 + 8.0 - 0.5 * 16.0);
}

TEST(Potential, ClosedFormInLinearTail)
{
    const double s = 3.0, lam = 0.25; // chi = 2
    EXPECT_DOUBLE_EQ(F(s, {Mode::RampC1, lam}), 8.0 - lam * 16.0);
    EXPECT_DOUBLE_EQ(f(s, {Mode::RampC1, lam}), 12.0 - 4.0 * lam * 8.0);
}

TEST(Potential, DerivativesMatchFiniteDifferences)
{
    for (Mode mode : {Mode::RampC1, Mode::ZeroC0})
        for (double lam : {0.0, 0.044, 1.0})
            for (double s = 0.2; s < 6.0; s += 0.0731) {
                const ProblemSpec spec{mode, lam};
                EXPECT_NEAR(f(s, spec), static_cast<double>(oracle::f(s, mode, lam)), 1e-7 * std::max(1.0, std::abs(f(s, spec))))
                    << s;
                auto fs = [&](long double x) { return static_cast<long double>(f(static_cast<double>(x), spec)); };
                EXPECT_NEAR(f_prime(s, spec), static_cast<double>(oracle::d1(fs, s, 1e-4L)),
                            1e-6 * std::max(1.0, std::abs(f_prime(s, spec))))
                    << s;
            }
}

TEST(ProblemSpec, TrivialProfilesAndThresholds)
{
    EXPECT_EQ(top_value(Mode::RampC1), 1.0);
    EXPECT_EQ(top_value(Mode::ZeroC0), 0.0);
    EXPECT_EQ(trivial_profile(Mode::RampC1, 0.3), 0.3);
    EXPECT_DOUBLE_EQ(trivial_profile(Mode::ZeroC0, 0.5), 0.25);
    EXPECT_EQ(energy_threshold(Mode::RampC1), 0.5);
    EXPECT_DOUBLE_EQ(energy_threshold(Mode::ZeroC0), -1.0 / 6.0);
}

TEST(ProblemSpec, ParseMode)
{
    EXPECT_EQ(parse_mode("ramp"), Mode::RampC1);
    EXPECT_EQ(parse_mode("RampC1"), Mode::RampC1);
    EXPECT_EQ(parse_mode("zero"), Mode::ZeroC0);
    EXPECT_EQ(parse_mode("ZeroC0"), Mode::ZeroC0);
    EXPECT_THROW(parse_mode("linear"), Error);
}
