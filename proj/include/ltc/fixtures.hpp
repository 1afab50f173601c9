#pragma once

#include <cmath>
#include <string>

#include "ltc/error.hpp"
#include "ltc/eulerflow.hpp"
#include "ltc/strip2d.hpp"

namespace ltc::fixtures {

/// u = x2^2/2 with F(s) = -s: v = (-x2, 0), a shear flow.
inline FlowField shear(double L = 4.0, double hx = 1.0 / 16.0, double hy = 1.0 / 32.0)
{
    const StripGrid g = StripGrid::make(L, hx, hy);
    const Field2D u = sample_field(g, [](double, double y) { return 0.5 * y * y; });
    return to_flow(u, [](double s) { return -s; }, 0.0);
}

/// u = sin x1 sin(pi x2) on [-pi, pi] x [0, 1], F(s) = (1 + pi^2) s^2 / 2.
/// Refinement r uses hx = 2 pi / (32 2^r), hy = 1 / (16 2^r).
inline FlowField cellular(int r = 0)
{
    const double pi = std::acos(-1.0);
    const double n = std::ldexp(1.0, r);
    const StripGrid g = StripGrid::make(pi, 2.0 * pi / (32.0 * n), 1.0 / (16.0 * n));
    const Field2D u = sample_field(g, [&](double x, double y) { return std::sin(x) * std::sin(pi * y); });
    return to_flow(u, [&](double s) { return 0.5 * (1.0 + pi * pi) * s * s; }, 0.0);
}

/// cellular plus 0.1 sinh(b x1) sin(2 pi x2) / sinh(b pi) with b^2 = 3 pi^2 - 1, which
/// solves the same linear equation but is not a discrete eigenfunction of the
/// same eigenvalue, so discrete vorticity transport does not cancel. The
/// residual window excludes 0.5 at each end, where the sinh term is steepest.
inline FlowField mixed(int r = 0, double margin = 0.5)
{
    const double pi = std::acos(-1.0);
    const double b = std::sqrt(3.0 * pi * pi - 1.0);
    const double n = std::ldexp(1.0, r);
    const StripGrid g = StripGrid::make(pi, 2.0 * pi / (32.0 * n), 1.0 / (16.0 * n));
    const Field2D u = sample_field(g, [&](double x, double y) {
        return std::sin(x) * std::sin(pi * y) + 0.1 * std::sinh(b * x) * std::sin(2.0 * pi * y) / std::sinh(b * pi);
    });
    return to_flow(u, [&](double s) { return 0.5 * (1.0 + pi * pi) * s * s; }, margin);
}

inline FlowField by_name(const std::string& name, int r = 0)
{
    if (name == "shear") return shear();
    if (name == "cellular") return cellular(r);
    if (name == "mixed") return mixed(r);
    throw Error(ErrorKind::Config, "unknown fixture '" + name + "' (shear, cellular, mixed)");
}

} // namespace ltc::fixtures
