#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ltc/nonlinearity.hpp"
#include "ltc/strip2d.hpp"

namespace ltc {

/// Wall averages of v1: top (x2 = 1) and bottom (x2 = 0) walls, toward x1 = +inf and -inf.
struct BoundaryLimits {
    double top_plus = 0.0;
    double top_minus = 0.0;
    double bottom_plus = 0.0;
    double bottom_minus = 0.0;
};

struct FlowField {
    StripGrid grid;
    std::vector<double> v1, v2, P;
    BoundaryLimits limits;
    /// Length excluded at each end by verification quadratures.
    double margin = 2.0;

    std::size_t idx(std::size_t i, std::size_t j) const { return i * grid.ny + j; }
    double speed(std::size_t k) const { return std::hypot(v1[k], v2[k]); }
    double max_speed() const
    {
        double m = 0.0;
        for (std::size_t k = 0; k < v1.size(); ++k) m = std::max(m, speed(k));
        return m;
    }
};

/// Residual checks use nodes at least this many nodes from walls and ends, so
/// their stencils never touch one-sided wall or end differences.
inline constexpr std::size_t stencil_clearance = 3;

namespace detail {

/// Columns lo..hi used by verification: the trusted window, or all columns when margin is 0.
inline std::pair<std::size_t, std::size_t> verification_columns(const StripGrid& g, double margin)
{
    if (margin <= 0.0) return {0, g.nx - 1};
    return trusted_columns(g, margin);
}

inline double wall_average(const FlowField& v, std::size_t j, double a, double b)
{
    long double s = 0.0L;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.grid.nx; ++i) {
        const double x = v.grid.x1(i);
        if (x >= a - 1e-12 && x <= b + 1e-12) {
            s += v.v1[v.idx(i, j)];
            ++n;
        }
    }
    return n ? static_cast<double>(s / static_cast<long double>(n)) : std::numeric_limits<double>::quiet_NaN();
}

} // namespace detail

inline void extract_limits(FlowField& v)
{
    const double L = v.grid.L;
    const double inner = std::max(L - v.margin - 1.0, 0.0);
    const double outer = std::max(L - v.margin, 0.0);
    const std::size_t top = v.grid.ny - 1;
    v.limits.top_plus = detail::wall_average(v, top, inner, outer);
    v.limits.top_minus = detail::wall_average(v, top, -outer, -inner);
    v.limits.bottom_plus = detail::wall_average(v, 0, inner, outer);
    v.limits.bottom_minus = detail::wall_average(v, 0, -outer, -inner);
}

/// v = (-d2 u, d1 u), P = -F(u) - |v|^2/2; central differences inside, one-sided
/// second order at walls and ends.
inline FlowField to_flow(const Field2D& u, const std::function<double(double)>& Ftotal, double margin = 2.0)
{
    const StripGrid& g = u.grid;
    const std::size_t nx = g.nx, ny = g.ny;
    FlowField v;
    v.grid = g;
    v.margin = margin;
    v.v1.assign(g.size(), 0.0);
    v.v2.assign(g.size(), 0.0);
    v.P.assign(g.size(), 0.0);
    const double ihx = 1.0 / (2.0 * g.hx), ihy = 1.0 / (2.0 * g.hy);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            double dy;
            if (j == 0) dy = (-3.0 * u(i, 0) + 4.0 * u(i, 1) - u(i, 2)) * ihy;
            else if (j + 1 == ny) dy = (3.0 * u(i, j) - 4.0 * u(i, j - 1) + u(i, j - 2)) * ihy;
            else dy = (u(i, j + 1) - u(i, j - 1)) * ihy;
            double dx;
            if (i == 0) dx = (-3.0 * u(0, j) + 4.0 * u(1, j) - u(2, j)) * ihx;
            else if (i + 1 == nx) dx = (3.0 * u(i, j) - 4.0 * u(i - 1, j) + u(i - 2, j)) * ihx;
            else dx = (u(i + 1, j) - u(i - 1, j)) * ihx;
            const std::size_t k = v.idx(i, j);
            v.v1[k] = -dy;
            v.v2[k] = dx;
            v.P[k] = -Ftotal(u(i, j)) - 0.5 * (dx * dx + dy * dy);
        }
    }
    extract_limits(v);
    return v;
}

inline FlowField to_flow(const Field2D& u, const ProblemSpec& spec, double margin = 2.0)
{
    return to_flow(u, [spec](double s) { return F(s, spec); }, margin);
}

/// Max |D1 v1 + D2 v2| over interior nodes (central differences).
inline double divergence(const FlowField& v)
{
    const StripGrid& g = v.grid;
    const double ihx = 1.0 / (2.0 * g.hx), ihy = 1.0 / (2.0 * g.hy);
    double m = 0.0;
    for (std::size_t i = 1; i + 1 < g.nx; ++i)
        for (std::size_t j = 1; j + 1 < g.ny; ++j) {
            const double d = (v.v1[v.idx(i + 1, j)] - v.v1[v.idx(i - 1, j)]) * ihx + (v.v2[v.idx(i, j + 1)] - v.v2[v.idx(i, j - 1)]) * ihy;
            m = std::max(m, std::abs(d));
        }
    return m;
}

/// Max |v2| on the two walls.
inline double slip(const FlowField& v)
{
    double m = 0.0;
    for (std::size_t i = 0; i < v.grid.nx; ++i) {
        m = std::max(m, std::abs(v.v2[v.idx(i, 0)]));
        m = std::max(m, std::abs(v.v2[v.idx(i, v.grid.ny - 1)]));
    }
    return m;
}

/// Max over interior nodes of the verification window of |v . grad v + grad P|.
inline double euler_residual(const FlowField& v)
{
    const StripGrid& g = v.grid;
    const auto [lo, hi] = detail::verification_columns(g, v.margin);
    const double ihx = 1.0 / (2.0 * g.hx), ihy = 1.0 / (2.0 * g.hy);
    constexpr std::size_t c = stencil_clearance;
    double m = 0.0;
    for (std::size_t i = std::max(lo, c); i + c < g.nx && i <= hi; ++i)
        for (std::size_t j = c; j + c < g.ny; ++j) {
            const std::size_t k = v.idx(i, j), e = v.idx(i + 1, j), w = v.idx(i - 1, j), n = v.idx(i, j + 1), s = v.idx(i, j - 1);
            const double a = v.v1[k], b = v.v2[k];
            const double r1 = a * (v.v1[e] - v.v1[w]) * ihx + b * (v.v1[n] - v.v1[s]) * ihy + (v.P[e] - v.P[w]) * ihx;
            const double r2 = a * (v.v2[e] - v.v2[w]) * ihx + b * (v.v2[n] - v.v2[s]) * ihy + (v.P[n] - v.P[s]) * ihy;
            m = std::max(m, std::hypot(r1, r2));
        }
    return m;
}

/// omega = d1 v2 - d2 v1 at every node (one-sided second order at walls and ends).
inline std::vector<double> vorticity(const FlowField& v)
{
    const StripGrid& g = v.grid;
    const std::size_t nx = g.nx, ny = g.ny;
    const double ihx = 1.0 / (2.0 * g.hx), ihy = 1.0 / (2.0 * g.hy);
    auto dx = [&](const std::vector<double>& a, std::size_t i, std::size_t j) {
        if (i == 0) return (-3.0 * a[v.idx(0, j)] + 4.0 * a[v.idx(1, j)] - a[v.idx(2, j)]) * ihx;
        if (i + 1 == nx) return (3.0 * a[v.idx(i, j)] - 4.0 * a[v.idx(i - 1, j)] + a[v.idx(i - 2, j)]) * ihx;
        return (a[v.idx(i + 1, j)] - a[v.idx(i - 1, j)]) * ihx;
    };
    auto dy = [&](const std::vector<double>& a, std::size_t i, std::size_t j) {
        if (j == 0) return (-3.0 * a[v.idx(i, 0)] + 4.0 * a[v.idx(i, 1)] - a[v.idx(i, 2)]) * ihy;
        if (j + 1 == ny) return (3.0 * a[v.idx(i, j)] - 4.0 * a[v.idx(i, j - 1)] + a[v.idx(i, j - 2)]) * ihy;
        return (a[v.idx(i, j + 1)] - a[v.idx(i, j - 1)]) * ihy;
    };
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) w[v.idx(i, j)] = dx(v.v2, i, j) - dy(v.v1, i, j);
    return w;
}

/// Max |v . grad omega| over interior nodes of the verification window.
inline double vorticity_transport(const FlowField& v)
{
    const StripGrid& g = v.grid;
    const std::vector<double> w = vorticity(v);
    const auto [lo, hi] = detail::verification_columns(g, v.margin);
    const double ihx = 1.0 / (2.0 * g.hx), ihy = 1.0 / (2.0 * g.hy);
    constexpr std::size_t c = stencil_clearance;
    double m = 0.0;
    for (std::size_t i = std::max(lo, c); i + c < g.nx && i <= hi; ++i)
        for (std::size_t j = c; j + c < g.ny; ++j) {
            const std::size_t k = v.idx(i, j);
            const double t = v.v1[k] * (w[v.idx(i + 1, j)] - w[v.idx(i - 1, j)]) * ihx + v.v2[k] * (w[v.idx(i, j + 1)] - w[v.idx(i, j - 1)]) * ihy;
            m = std::max(m, std::abs(t));
        }
    return m;
}

namespace detail {

/// Exact integral of |v x v'|^2/|v|^2 along a segment of length h with v linear
/// between its end values: |a x b|/h times the swept angle.
inline double segment_curvature(double a1, double a2, double b1, double b2, double h, double eps_stag)
{
    if (std::hypot(a1, a2) <= eps_stag || std::hypot(b1, b2) <= eps_stag) return 0.0;
    const double c = a1 * b2 - a2 * b1;
    if (c == 0.0) return 0.0;
    return std::abs(c) / h * std::abs(std::atan2(c, a1 * b1 + a2 * b2));
}

} // namespace detail

/// Total curvature over the verification window. Along each grid line v is
/// reconstructed linearly and the directional part of the integrand is
/// integrated exactly; the transverse direction uses the trapezoid rule.
inline double total_curvature(const FlowField& v, double eps_stag)
{
    const StripGrid& g = v.grid;
    const auto [lo, hi] = detail::verification_columns(g, v.margin);
    long double rows = 0.0L;
    for (std::size_t j = 0; j < g.ny; ++j) {
        long double line = 0.0L;
        for (std::size_t i = lo; i < hi; ++i) {
            const std::size_t a = v.idx(i, j), b = v.idx(i + 1, j);
            line += detail::segment_curvature(v.v1[a], v.v2[a], v.v1[b], v.v2[b], g.hx, eps_stag);
        }
        rows += detail::trapezoid_weight(j, g.ny) * line;
    }
    long double cols = 0.0L;
    for (std::size_t i = lo; i <= hi; ++i) {
        long double line = 0.0L;
        for (std::size_t j = 0; j + 1 < g.ny; ++j) {
            const std::size_t a = v.idx(i, j), b = v.idx(i, j + 1);
            line += detail::segment_curvature(v.v1[a], v.v2[a], v.v1[b], v.v2[b], g.hy, eps_stag);
        }
        cols += ((i == lo || i == hi) ? 0.5L : 1.0L) * line;
    }
    return static_cast<double>(rows * g.hy + cols * g.hx);
}

/// Default stagnation threshold: 1e-5 of the peak speed.
inline double default_eps_stag(const FlowField& v) { return 1e-5 * v.max_speed(); }

inline double curvature_formula(const BoundaryLimits& b)
{
    const double pi = std::acos(-1.0);
    auto sq = [](double x) { return x * std::abs(x); };
    return 0.25 * pi * (sq(b.top_plus) - sq(b.top_minus) + sq(b.bottom_minus) - sq(b.bottom_plus));
}

inline double curvature_formula(const FlowField& v) { return curvature_formula(v.limits); }

/// (top_+^2 - top_-^2) - (bottom_+^2 - bottom_-^2); zero for exact solutions.
inline double balancing_defect(const BoundaryLimits& b)
{
    return (b.top_plus * b.top_plus - b.top_minus * b.top_minus) - (b.bottom_plus * b.bottom_plus - b.bottom_minus * b.bottom_minus);
}

/// |balancing_defect| over the mean of the four squared limits (at least 1).
inline double relative_balancing_defect(const BoundaryLimits& b)
{
    const double scale = 0.25 * (b.top_plus * b.top_plus + b.top_minus * b.top_minus + b.bottom_plus * b.bottom_plus +
                                b.bottom_minus * b.bottom_minus);
    return std::abs(balancing_defect(b)) / std::max(1.0, scale);
}

enum class AngleClass { Shear, FullCircle, Semicircle, Inconclusive };

inline const char* to_string(AngleClass c)
{
    switch (c) {
    case AngleClass::Shear: return "Shear";
    case AngleClass::FullCircle: return "FullCircle";
    case AngleClass::Semicircle: return "Semicircle";
    case AngleClass::Inconclusive: return "Inconclusive";
    }
    return "?";
}

struct AngleReport {
    AngleClass cls = AngleClass::Inconclusive;
    /// Node samples per sector.
    std::array<std::size_t, 360> histogram{};
    /// Node samples plus grid edges whose linear reconstruction sweeps the sector.
    std::array<std::size_t, 360> reach{};
    std::size_t samples = 0;
    std::size_t occupied = 0;
    /// First sector of the closed half-circle for Semicircle, else -1.
    int semicircle_start = -1;
    /// Node samples in the open complementary half-circle (best half-circle if none fits).
    std::size_t complement_mass = 0;
};

inline int angle_sector(double a, double b)
{
    const double pi = std::acos(-1.0);
    double th = std::atan2(b, a);
    if (th < 0.0) th += 2.0 * pi;
    int s = static_cast<int>(std::floor(th / (2.0 * pi) * 360.0));
    return ((s % 360) + 360) % 360;
}

/// Direction sectors of the non-stagnant part of the verification window. A
/// sector is occupied when at least min_count nodes or grid edges reach it;
/// an edge reaches the sectors swept by v along its linear reconstruction
/// (edges whose end vectors are nearly opposite pass by a stagnation point and
/// are skipped).
inline AngleReport angle_classify(const FlowField& v, double eps_stag, std::size_t min_count = 3)
{
    const StripGrid& g = v.grid;
    const auto [lo, hi] = detail::verification_columns(g, v.margin);
    AngleReport r;
    std::vector<int> sec(g.size(), -1);
    std::vector<double> va(g.size()), vb(g.size());
    for (std::size_t i = lo; i <= hi; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
            const std::size_t k = v.idx(i, j);
            double a = v.v1[k], b = v.v2[k];
            const double sp = std::hypot(a, b);
            if (!(sp > eps_stag)) continue;
            if (std::abs(b) <= 1e-9 * sp) b = 0.0;
            if (std::abs(a) <= 1e-9 * sp) a = 0.0;
            va[k] = a;
            vb[k] = b;
            sec[k] = angle_sector(a, b);
            ++r.histogram[static_cast<std::size_t>(sec[k])];
            ++r.reach[static_cast<std::size_t>(sec[k])];
            ++r.samples;
        }
    auto sweep = [&](std::size_t p, std::size_t q) {
        if (sec[p] < 0 || sec[q] < 0 || sec[p] == sec[q]) return;
        const double cr = va[p] * vb[q] - vb[p] * va[q];
        const double dt = va[p] * va[q] + vb[p] * vb[q];
        if (dt < 0.0 && std::abs(cr) <= 1e-6 * std::abs(dt)) return;
        const int step = cr > 0.0 ? 1 : -1;
        for (int s = (sec[p] + step + 360) % 360; s != sec[q]; s = (s + step + 360) % 360) ++r.reach[static_cast<std::size_t>(s)];
    };
    for (std::size_t i = lo; i <= hi; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
            if (i < hi) sweep(v.idx(i, j), v.idx(i + 1, j));
            if (j + 1 < g.ny) sweep(v.idx(i, j), v.idx(i, j + 1));
        }
    std::array<bool, 360> occ{};
    for (std::size_t s = 0; s < 360; ++s) {
        occ[s] = r.reach[s] >= min_count;
        r.occupied += occ[s];
    }
    // shear: every sample in one sector or two antipodal ones
    for (std::size_t s = 0; s < 180 && r.samples > 0; ++s) {
        if (r.histogram[s] + r.histogram[s + 180] == r.samples) {
            r.cls = AngleClass::Shear;
            return r;
        }
    }
    if (r.occupied == 360) {
        r.cls = AngleClass::FullCircle;
        return r;
    }
    r.complement_mass = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < 360; ++k) {
        bool filled = true, empty = true;
        std::size_t mass = 0;
        for (std::size_t d = 0; d < 180; ++d) filled = filled && occ[(k + d) % 360];
        for (std::size_t d = 181; d < 360; ++d) {
            empty = empty && !occ[(k + d) % 360];
            mass += r.histogram[(k + d) % 360];
        }
        if (filled && empty) {
            r.cls = AngleClass::Semicircle;
            r.semicircle_start = static_cast<int>(k);
            r.complement_mass = mass;
            return r;
        }
        r.complement_mass = std::min(r.complement_mass, mass);
    }
    return r;
}

struct SignPattern {
    bool ok = true;
    std::vector<std::string> violations;
    /// Abscissa of the top-wall sign change (NaN if none or several).
    double top_sign_change = std::numeric_limits<double>::quiet_NaN();
    int top_sign_changes = 0;
    double bottom_max = 0.0;
};

namespace detail {

inline int count_sign_changes(const std::vector<double>& r, double& where, const StripGrid& g)
{
    int n = 0;
    int last = 0;
    std::size_t last_i = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const int s = r[i] > 0.0 ? 1 : (r[i] < 0.0 ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) {
            ++n;
            const double a = r[last_i], b = r[i];
            where = g.x1(last_i) + (g.x1(i) - g.x1(last_i)) * a / (a - b);
        }
        last = s;
        last_i = i;
    }
    return n;
}

} // namespace detail

/// Sign and monotonicity pattern of v1 on the walls.
inline SignPattern boundary_sign_pattern(const FlowField& v, Mode mode)
{
    const StripGrid& g = v.grid;
    SignPattern out;
    std::vector<double> top(g.nx), bottom(g.nx);
    double scale = 1.0;
    for (std::size_t i = 0; i < g.nx; ++i) {
        top[i] = v.v1[v.idx(i, g.ny - 1)];
        bottom[i] = v.v1[v.idx(i, 0)];
        scale = std::max({scale, std::abs(top[i]), std::abs(bottom[i])});
    }
    const double tol = 1e-8 * scale;
    out.bottom_max = *std::max_element(bottom.begin(), bottom.end());
    double where = std::numeric_limits<double>::quiet_NaN();
    out.top_sign_changes = detail::count_sign_changes(top, where, g);
    if (out.top_sign_changes == 1) out.top_sign_change = where;
    auto fail = [&](const std::string& s) {
        out.ok = false;
        out.violations.push_back(s);
    };
    if (mode == Mode::RampC1) {
        for (std::size_t i = 0; i < g.nx; ++i)
            if (!(bottom[i] < 0.0)) {
                fail("bottom v1 not negative at x1=" + std::to_string(g.x1(i)));
                break;
            }
        if (out.top_sign_changes != 1) fail("top v1 has " + std::to_string(out.top_sign_changes) + " sign changes");
        const auto [lo, hi] = detail::verification_columns(g, v.margin);
        for (std::size_t i = lo; i < hi; ++i) {
            if (top[i + 1] < top[i] - tol) {
                fail("top v1 decreases at x1=" + std::to_string(g.x1(i)));
                break;
            }
        }
        for (std::size_t i = lo; i < hi; ++i) {
            if (bottom[i + 1] > bottom[i] + tol) {
                fail("bottom v1 increases at x1=" + std::to_string(g.x1(i)));
                break;
            }
        }
    } else {
        for (std::size_t i = 0; i < g.nx; ++i) {
            if (top[i] < -tol) {
                fail("top v1 negative at x1=" + std::to_string(g.x1(i)));
                break;
            }
        }
        for (std::size_t i = 0; i < g.nx; ++i) {
            if (bottom[i] > tol) {
                fail("bottom v1 positive at x1=" + std::to_string(g.x1(i)));
                break;
            }
        }
    }
    return out;
}

struct WallNormalization {
    long cells = 0;
    double abscissa_before = std::numeric_limits<double>::quiet_NaN();
    double abscissa_after = std::numeric_limits<double>::quiet_NaN();
    Field2D field;
};

/// Translates u by whole cells so the single top-wall sign change of v1 sits
/// within hx/2 of x1 = 0.
inline WallNormalization wall_normalize(const Field2D& u, const ProblemSpec& spec, const Profile1D& phi, const Profile1D& phibar,
                                        double margin = 2.0)
{
    WallNormalization out;
    const SignPattern before = boundary_sign_pattern(to_flow(u, spec, margin), spec.mode);
    out.abscissa_before = before.top_sign_change;
    if (!std::isfinite(out.abscissa_before)) {
        out.field = u;
        return out;
    }
    out.cells = std::lround(out.abscissa_before / u.grid.hx);
    out.field = shift_cells(u, out.cells, phi, phibar);
    out.abscissa_after = boundary_sign_pattern(to_flow(out.field, spec, margin), spec.mode).top_sign_change;
    return out;
}

struct FlowReport {
    double euler_residual = 0.0;
    double divergence = 0.0;
    double slip = 0.0;
    double vorticity_transport = 0.0;
    double total_curvature_quadrature = 0.0;
    double total_curvature_formula = 0.0;
    double balancing_defect = 0.0;
    double balancing_defect_relative = 0.0;
    double eps_stag = 0.0;
    AngleClass angle_class = AngleClass::Inconclusive;
    std::size_t angle_occupied = 0;
    std::size_t angle_complement_mass = 0;
    bool sign_pattern_ok = false;
    double top_sign_change = std::numeric_limits<double>::quiet_NaN();
    BoundaryLimits limits;
};

inline FlowReport verify_flow(const FlowField& v, Mode mode, double eps_stag)
{
    FlowReport r;
    r.euler_residual = euler_residual(v);
    r.divergence = divergence(v);
    r.slip = slip(v);
    r.vorticity_transport = vorticity_transport(v);
    r.eps_stag = eps_stag;
    r.total_curvature_quadrature = total_curvature(v, eps_stag);
    r.total_curvature_formula = curvature_formula(v);
    r.balancing_defect = std::abs(balancing_defect(v.limits));
    r.balancing_defect_relative = relative_balancing_defect(v.limits);
    const AngleReport a = angle_classify(v, eps_stag);
    r.angle_class = a.cls;
    r.angle_occupied = a.occupied;
    r.angle_complement_mass = a.complement_mass;
    const SignPattern s = boundary_sign_pattern(v, mode);
    r.sign_pattern_ok = s.ok;
    r.top_sign_change = s.top_sign_change;
    r.limits = v.limits;
    return r;
}

} // namespace ltc
