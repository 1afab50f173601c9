#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "ltc/bvp1d.hpp"
#include "ltc/error.hpp"
#include "ltc/nonlinearity.hpp"
#include "ltc/profile.hpp"

namespace ltc {

struct StripGrid {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double L = 0.0;
    double hx = 0.0;
    double hy = 0.0;

    static StripGrid make(double L, double hx, double hy)
    {
        StripGrid g;
        const double cx = 2.0 * L / hx;
        const double cy = 1.0 / hy;
        if (!(L > 0.0) || !(hx > 0.0) || !(hy > 0.0) || std::abs(cx - std::round(cx)) > 1e-9 * cx ||
            std::abs(cy - std::round(cy)) > 1e-9 * cy)
            throw Error(ErrorKind::InvalidArgument, "strip spacings must divide 2L and 1");
        g.nx = static_cast<std::size_t>(std::llround(cx)) + 1;
        g.ny = static_cast<std::size_t>(std::llround(cy)) + 1;
        if (g.nx < 3 || g.ny < 3) throw Error(ErrorKind::InvalidArgument, "strip grid too small");
        g.L = L;
        g.hx = hx;
        g.hy = hy;
        return g;
    }

    double x1(std::size_t i) const { return -L + static_cast<double>(i) * hx; }
    double x2(std::size_t j) const { return static_cast<double>(j) * hy; }
    std::size_t size() const { return nx * ny; }
};

/// Nodal values on [-L, L] x [0, 1], column-contiguous (index i * ny + j).
struct Field2D {
    StripGrid grid;
    std::vector<double> values;

    Field2D() = default;
    explicit Field2D(const StripGrid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    double& operator()(std::size_t i, std::size_t j) { return values[i * grid.ny + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * grid.ny + j]; }

    Profile1D column(std::size_t i) const
    {
        Profile1D p;
        p.values.assign(values.begin() + static_cast<std::ptrdiff_t>(i * grid.ny),
                        values.begin() + static_cast<std::ptrdiff_t>((i + 1) * grid.ny));
        return p;
    }
};

inline Field2D sample_field(const StripGrid& g, const std::function<double(double, double)>& fn)
{
    Field2D u(g);
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) u(i, j) = fn(g.x1(i), g.x2(j));
    return u;
}

/// Trusted window: the outermost `margin` length units at both ends are excluded.
inline std::pair<std::size_t, std::size_t> trusted_columns(const StripGrid& g, double margin = 2.0)
{
    std::size_t lo = 0, hi = g.nx - 1;
    while (lo < g.nx && g.x1(lo) < -g.L + margin - 1e-12) ++lo;
    while (hi > 0 && g.x1(hi) > g.L - margin + 1e-12) --hi;
    if (lo > hi) throw Error(ErrorKind::InvalidArgument, "trusted window is empty for L=" + std::to_string(g.L));
    return {lo, hi};
}

/// Columns with |x1| <= half_width.
inline std::pair<std::size_t, std::size_t> window_columns(const StripGrid& g, double half_width)
{
    std::size_t lo = 0, hi = g.nx - 1;
    while (lo < g.nx && g.x1(lo) < -half_width - 1e-12) ++lo;
    while (hi > 0 && g.x1(hi) > half_width + 1e-12) --hi;
    return {lo, hi};
}

namespace detail {

inline void check_pair_grid(const Profile1D& phi, const Profile1D& phibar, const StripGrid& g)
{
    if (phi.values.size() != g.ny || phibar.values.size() != g.ny)
        throw Error(ErrorKind::InvalidArgument, "boundary profiles do not match the strip's x2 grid");
}

inline double trapezoid_weight(std::size_t k, std::size_t n)
{
    return (k == 0 || k + 1 == n) ? 0.5 : 1.0;
}

struct Energy2D {
    double value = 0.0;
    double magnitude = 0.0;
};

inline Energy2D energy_parts_2d(const Field2D& u, const ProblemSpec& spec)
{
    const StripGrid& g = u.grid;
    const std::size_t nx = g.nx, ny = g.ny;
    long double ex = 0.0L, ey = 0.0L, pot = 0.0L, pot_abs = 0.0L;
    for (std::size_t i = 0; i < nx; ++i) {
        const double wx = trapezoid_weight(i, nx);
        const double* c = &u.values[i * ny];
        long double col_y = 0.0L, col_p = 0.0L, col_pa = 0.0L;
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            const long double d = static_cast<long double>(c[j + 1]) - c[j];
            col_y += d * d;
        }
        for (std::size_t j = 0; j < ny; ++j) {
            const double Fj = F(c[j], spec);
            const double wy = trapezoid_weight(j, ny);
            col_p += wy * Fj;
            col_pa += wy * std::abs(Fj);
        }
        ey += wx * col_y;
        pot += wx * col_p;
        pot_abs += wx * col_pa;
        if (i + 1 < nx) {
            const double* n = c + ny;
            for (std::size_t j = 0; j < ny; ++j) {
                const long double d = static_cast<long double>(n[j]) - c[j];
                ex += trapezoid_weight(j, ny) * d * d;
            }
        }
    }
    const long double hx = g.hx, hy = g.hy;
    const long double grad = 0.5L * ex * hy / hx + 0.5L * ey * hx / hy;
    return {static_cast<double>(grad - hx * hy * pot), static_cast<double>(grad + hx * hy * pot_abs)};
}

} // namespace detail

/// Throws unless the four boundary traces are pinned exactly.
inline void check_traces(const Field2D& u, const Profile1D& phi, const Profile1D& phibar, Mode mode)
{
    const StripGrid& g = u.grid;
    detail::check_pair_grid(phi, phibar, g);
    const double c = top_value(mode);
    for (std::size_t i = 0; i < g.nx; ++i)
        if (u(i, 0) != 0.0 || u(i, g.ny - 1) != c) throw Error(ErrorKind::InvalidArgument, "wall trace violated at column " + std::to_string(i));
    for (std::size_t j = 0; j < g.ny; ++j)
        if (u(0, j) != phi[j] || u(g.nx - 1, j) != phibar[j])
            throw Error(ErrorKind::InvalidArgument, "end trace violated at row " + std::to_string(j));
}

inline bool in_corridor(const Field2D& u, const Profile1D& phi, const Profile1D& phibar)
{
    const StripGrid& g = u.grid;
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j)
            if (u(i, j) < phi[j] || u(i, j) > phibar[j]) return false;
    return true;
}

/// Edge-weighted discrete energy; for x1-independent fields it equals 2L times the 1D energy.
inline double energy_2d(const Field2D& u, const ProblemSpec& spec, const Profile1D& phi, const Profile1D& phibar)
{
    check_traces(u, phi, phibar, spec.mode);
    return detail::energy_parts_2d(u, spec).value;
}

inline double energy_2d_unchecked(const Field2D& u, const ProblemSpec& spec)
{
    return detail::energy_parts_2d(u, spec).value;
}

inline Field2D seed_field(const Profile1D& phi, const Profile1D& phibar, const StripGrid& g)
{
    detail::check_pair_grid(phi, phibar, g);
    Field2D u(g);
    for (std::size_t i = 0; i < g.nx; ++i) {
        const double s = g.x1(i) / (2.0 * g.L);
        for (std::size_t j = 0; j < g.ny; ++j) u(i, j) = s * (phibar[j] - phi[j]) + 0.5 * (phibar[j] + phi[j]);
    }
    for (std::size_t j = 0; j < g.ny; ++j) {
        u(0, j) = phi[j];
        u(g.nx - 1, j) = phibar[j];
    }
    return u;
}

inline Field2D truncate_corridor(Field2D u, const Profile1D& phi, const Profile1D& phibar)
{
    detail::check_pair_grid(phi, phibar, u.grid);
    const std::size_t ny = u.grid.ny;
    for (std::size_t i = 0; i < u.grid.nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) u(i, j) = std::clamp(u(i, j), phi[j], phibar[j]);
    return u;
}

/// Nodal residual Delta_h u + f(u) at interior nodes, zero elsewhere.
inline std::vector<double> residual_2d(const Field2D& u, const ProblemSpec& spec)
{
    const StripGrid& g = u.grid;
    const std::size_t nx = g.nx, ny = g.ny;
    const double ix2 = 1.0 / (g.hx * g.hx), iy2 = 1.0 / (g.hy * g.hy);
    std::vector<double> r(g.size(), 0.0);
    for (std::size_t i = 1; i + 1 < nx; ++i)
        for (std::size_t j = 1; j + 1 < ny; ++j) {
            const std::size_t k = i * ny + j;
            const double c = u.values[k];
            r[k] = ((u.values[k - ny] - c) + (u.values[k + ny] - c)) * ix2 + ((u.values[k - 1] - c) + (u.values[k + 1] - c)) * iy2 +
                   f(c, spec);
        }
    return r;
}

inline double residual_norm_2d(const Field2D& u, const ProblemSpec& spec)
{
    double m = 0.0;
    for (double v : residual_2d(u, spec)) m = std::max(m, std::abs(v));
    return m;
}

struct Settings2D {
    double tol_residual = 1e-8;
    /// Relative energy change below which the iteration counts as stalled.
    double tol_stall = 1e-12;
    int max_newton = 100;
    int gs_presweeps = 4;
    double sigma0 = 1.0;
    double sigma_min = 1e-6;
};

struct Minimize2DResult {
    Field2D field;
    bool converged = false;
    int iterations = 0;
    int sweeps = 0;
    double residual = 0.0;
    double energy = 0.0;
    std::vector<double> residual_history;
    std::vector<double> energy_history;
    /// Largest energy increase seen between accepted iterates (roundoff scale).
    double max_energy_increase = 0.0;
    bool corridor_ok = true;
};

namespace detail {

/// One red-black nonlinear Gauss-Seidel sweep; each node minimizes its local
/// energy by a guarded scalar Newton step restricted to the corridor.
inline void gs_sweep(Field2D& u, const ProblemSpec& spec, const Profile1D& phi, const Profile1D& phibar)
{
    const StripGrid& g = u.grid;
    const std::size_t nx = g.nx, ny = g.ny;
    const double ix2 = 1.0 / (g.hx * g.hx), iy2 = 1.0 / (g.hy * g.hy);
    const double c = 2.0 * ix2 + 2.0 * iy2;
    for (int color = 0; color < 2; ++color) {
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            for (std::size_t j = 1 + ((i + 1 + color) & 1); j + 1 < ny; j += 2) {
                const std::size_t k = i * ny + j;
                const double S = (u.values[k - ny] + u.values[k + ny]) * ix2 + (u.values[k - 1] + u.values[k + 1]) * iy2;
                const double x = u.values[k];
                auto local = [&](double y) { return 0.5 * c * y * y - S * y - F(y, spec); };
                const PotentialJet p = potential(x, spec);
                const double gval = c * x - S - p.f;
                const double curv = c - p.df;
                double step = curv > 0.0 ? -gval / curv : -gval / c;
                const double e0 = local(x);
                for (int h = 0; h < 12; ++h, step *= 0.5) {
                    const double y = std::clamp(x + step, phi[j], phibar[j]);
                    if (local(y) <= e0) {
                        u.values[k] = y;
                        break;
                    }
                }
            }
        }
    }
}

struct NewtonSystem {
    std::size_t nx = 0, ny = 0, n = 0;
    Eigen::SparseMatrix<double> J;
    std::vector<double*> diag;
    std::vector<double> base_diag;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;

    explicit NewtonSystem(const StripGrid& g) : nx(g.nx), ny(g.ny)
    {
        const std::size_t mx = nx - 2, my = ny - 2;
        n = mx * my;
        const double ix2 = 1.0 / (g.hx * g.hx), iy2 = 1.0 / (g.hy * g.hy);
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(5 * n);
        for (std::size_t a = 0; a < mx; ++a)
            for (std::size_t b = 0; b < my; ++b) {
                const int k = static_cast<int>(a * my + b);
                t.emplace_back(k, k, 2.0 * ix2 + 2.0 * iy2);
                if (b > 0) t.emplace_back(k, k - 1, -iy2);
                if (b + 1 < my) t.emplace_back(k, k + 1, -iy2);
                if (a > 0) t.emplace_back(k, k - static_cast<int>(my), -ix2);
                if (a + 1 < mx) t.emplace_back(k, k + static_cast<int>(my), -ix2);
            }
        J.resize(static_cast<int>(n), static_cast<int>(n));
        J.setFromTriplets(t.begin(), t.end());
        J.makeCompressed();
        diag.resize(n);
        base_diag.resize(n);
        for (int k = 0; k < J.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(J, k); it; ++it)
                if (it.row() == it.col()) {
                    diag[static_cast<std::size_t>(k)] = &it.valueRef();
                    base_diag[static_cast<std::size_t>(k)] = it.value();
                }
        llt.analyzePattern(J);
    }

    std::size_t node(std::size_t k) const { return (k / (ny - 2) + 1) * ny + (k % (ny - 2) + 1); }

    bool factor(const std::vector<double>& df, double sigma)
    {
        for (std::size_t k = 0; k < n; ++k) *diag[k] = base_diag[k] - df[k] + sigma;
        llt.factorize(J);
        return llt.info() == Eigen::Success;
    }
};

} // namespace detail

/// Energy descent toward a solution of -Delta u = f(u) inside the corridor:
/// red-black Gauss-Seidel pre-sweeps, then Levenberg-Marquardt Newton with a
/// sparse Cholesky factorization and an energy line search; every iterate is
/// clamped into the corridor.
inline Minimize2DResult minimize_2d(const ProblemSpec& spec, const Profile1D& phi, const Profile1D& phibar, const Field2D& seed,
                                    const Settings2D& s = {})
{
    check_traces(seed, phi, phibar, spec.mode);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    Minimize2DResult out;
    out.field = truncate_corridor(seed, phi, phibar);
    Field2D& u = out.field;
    const StripGrid& g = u.grid;
    detail::Energy2D E = detail::energy_parts_2d(u, spec);
    out.energy_history.push_back(E.value);

    auto record_energy = [&](const detail::Energy2D& e) {
        out.max_energy_increase = std::max(out.max_energy_increase, e.value - E.value);
        E = e;
        out.energy_history.push_back(E.value);
    };

    for (int sweep = 0; sweep < s.gs_presweeps; ++sweep) {
        detail::gs_sweep(u, spec, phi, phibar);
        out.corridor_ok = out.corridor_ok && in_corridor(u, phi, phibar);
        record_energy(detail::energy_parts_2d(u, spec));
        ++out.sweeps;
    }

    detail::NewtonSystem sys(g);
    std::vector<double> df(sys.n);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(sys.n));
    double sigma = s.sigma0;
    double last_change = std::numeric_limits<double>::infinity();
    Field2D trial(g);

    for (int it = 0;; ++it) {
        const std::vector<double> r = residual_2d(u, spec);
        double res = 0.0;
        for (double v : r) res = std::max(res, std::abs(v));
        out.residual = res;
        out.residual_history.push_back(res);
        out.iterations = it;
        out.energy = E.value;
        const bool stalled = it == 0 ? res <= s.tol_residual : last_change <= s.tol_stall * std::max(1.0, std::abs(E.value));
        if (res <= s.tol_residual && stalled) {
            out.converged = true;
            break;
        }
        if (it >= s.max_newton) break;

        for (std::size_t k = 0; k < sys.n; ++k) {
            const std::size_t nd = sys.node(k);
            df[k] = f_prime(u.values[nd], spec);
            rhs[static_cast<Eigen::Index>(k)] = r[nd];
        }
        while (!sys.factor(df, sigma)) sigma = std::max(10.0 * sigma, 1.0);
        const Eigen::VectorXd d = sys.llt.solve(rhs);

        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
            trial.values = u.values;
            for (std::size_t k = 0; k < sys.n; ++k) {
                const std::size_t nd = sys.node(k);
                const std::size_t j = nd % g.ny;
                trial.values[nd] = std::clamp(u.values[nd] + t * d[static_cast<Eigen::Index>(k)], phi[j], phibar[j]);
            }
            const detail::Energy2D Et = detail::energy_parts_2d(trial, spec);
            if (Et.value <= E.value + 64.0 * eps * std::max(E.magnitude, Et.magnitude)) {
                last_change = std::abs(Et.value - E.value);
                u.values.swap(trial.values);
                record_energy(Et);
                accepted = true;
                break;
            }
        }
        out.corridor_ok = out.corridor_ok && in_corridor(u, phi, phibar);
        if (accepted && t == 1.0)
            sigma = std::max(0.1 * sigma, s.sigma_min);
        else
            sigma *= 10.0;
        if (!accepted) last_change = std::numeric_limits<double>::infinity();
    }
    return out;
}

struct ShiftResult {
    double a = 0.0;
    Field2D shifted;
};

namespace detail {

inline std::vector<double> mid_height_trace(const Field2D& u)
{
    const StripGrid& g = u.grid;
    std::vector<double> tr(g.nx);
    const double pos = 0.5 / g.hy;
    const std::size_t j0 = static_cast<std::size_t>(std::floor(pos));
    const double th = pos - static_cast<double>(j0);
    for (std::size_t i = 0; i < g.nx; ++i)
        tr[i] = th == 0.0 ? u(i, j0) : (1.0 - th) * u(i, j0) + th * u(i, j0 + 1);
    return tr;
}

inline double mid_value(const Profile1D& p)
{
    const double pos = 0.5 * static_cast<double>(p.cells());
    const std::size_t j0 = static_cast<std::size_t>(std::floor(pos));
    const double th = pos - static_cast<double>(j0);
    return th == 0.0 ? p[j0] : (1.0 - th) * p[j0] + th * p[j0 + 1];
}

} // namespace detail

/// Field translated by -a: out(x1) = u(x1 + a), cubic Lagrange in x1, with the
/// end traces used beyond the data. Walls and ends are re-pinned and the
/// result is clamped into the corridor.
inline Field2D translate_field(const Field2D& u, double a, const Profile1D& phi, const Profile1D& phibar)
{
    const StripGrid& g = u.grid;
    const long nx = static_cast<long>(g.nx);
    const std::size_t ny = g.ny;
    Field2D out(g);
    const double s = a / g.hx;
    const double fl = std::floor(s);
    const long shift = static_cast<long>(fl);
    const double th = s - fl;
    const double w[4] = {-th * (th - 1.0) * (th - 2.0) / 6.0, (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0,
                         -(th + 1.0) * th * (th - 2.0) / 2.0, (th + 1.0) * th * (th - 1.0) / 6.0};
    auto col = [&](long k, std::size_t j) {
        if (k < 0) return phi[j];
        if (k >= nx) return phibar[j];
        return u(static_cast<std::size_t>(k), j);
    };
    for (long i = 0; i < nx; ++i) {
        const long k = i + shift;
        for (std::size_t j = 0; j < ny; ++j) {
            out(static_cast<std::size_t>(i), j) =
                th == 0.0 ? col(k, j) : w[0] * col(k - 1, j) + w[1] * col(k, j) + w[2] * col(k + 1, j) + w[3] * col(k + 2, j);
        }
    }
    const double c = u(0, ny - 1);
    for (std::size_t i = 0; i < g.nx; ++i) {
        out(i, 0) = 0.0;
        out(i, ny - 1) = c;
    }
    for (std::size_t j = 0; j < ny; ++j) {
        out(0, j) = phi[j];
        out(g.nx - 1, j) = phibar[j];
    }
    return truncate_corridor(std::move(out), phi, phibar);
}

/// Exact translation by a whole number of cells: out(x1) = u(x1 + k hx).
inline Field2D shift_cells(const Field2D& u, long k, const Profile1D& phi, const Profile1D& phibar)
{
    const StripGrid& g = u.grid;
    Field2D out(g);
    const long nx = static_cast<long>(g.nx);
    for (long i = 0; i < nx; ++i) {
        const long src = i + k;
        for (std::size_t j = 0; j < g.ny; ++j) {
            if (src < 0) out(static_cast<std::size_t>(i), j) = phi[j];
            else if (src >= nx) out(static_cast<std::size_t>(i), j) = phibar[j];
            else out(static_cast<std::size_t>(i), j) = u(static_cast<std::size_t>(src), j);
        }
    }
    for (std::size_t j = 0; j < g.ny; ++j) {
        out(0, j) = phi[j];
        out(g.nx - 1, j) = phibar[j];
    }
    return out;
}

/// Locates a with u(a, 1/2) equal to the mean of the end profiles at 1/2 and
/// translates the field so that point moves to x1 = 0.
inline ShiftResult reference_shift(const Field2D& u, const Profile1D& phi, const Profile1D& phibar)
{
    const StripGrid& g = u.grid;
    detail::check_pair_grid(phi, phibar, g);
    const std::vector<double> tr = detail::mid_height_trace(u);
    double scale = 0.0;
    for (double v : tr) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i + 1 < g.nx; ++i)
        if (tr[i + 1] < tr[i] - 1e-10 * std::max(1.0, scale))
            throw Error(ErrorKind::InvalidArgument, "mid-height trace is not increasing at column " + std::to_string(i));
    const double target = 0.5 * (detail::mid_value(phi) + detail::mid_value(phibar));
    if (!(target >= tr.front() && target <= tr.back()))
        throw Error(ErrorKind::TargetNotBracketed, "mid-height trace never reaches the reference value");
    std::size_t k = 0;
    while (k + 2 < g.nx && tr[k + 1] < target) ++k;
    const double den = tr[k + 1] - tr[k];
    const double th = den > 0.0 ? (target - tr[k]) / den : 0.0;
    ShiftResult out;
    out.a = g.x1(k) + th * g.hx;
    if (std::abs(out.a) < 1e-14 * g.hx) out.a = 0.0;
    out.shifted = translate_field(u, out.a, phi, phibar);
    return out;
}

/// Places a normalized field on a larger grid with the same spacings,
/// filling the new end regions with the end profiles.
inline Field2D extend_field(const Field2D& u, const StripGrid& g, const Profile1D& phi, const Profile1D& phibar)
{
    if (std::abs(u.grid.hx - g.hx) > 1e-15 || u.grid.ny != g.ny)
        throw Error(ErrorKind::InvalidArgument, "extension requires equal spacings");
    Field2D out(g);
    const long off = std::lround((u.grid.x1(0) - g.x1(0)) / g.hx);
    for (std::size_t i = 0; i < g.nx; ++i) {
        const long k = static_cast<long>(i) - off;
        for (std::size_t j = 0; j < g.ny; ++j) {
            if (k < 0) out(i, j) = phi[j];
            else if (k >= static_cast<long>(u.grid.nx)) out(i, j) = phibar[j];
            else out(i, j) = u(static_cast<std::size_t>(k), j);
        }
    }
    return out;
}

/// Max |u - w| over columns with |x1| <= half_width (grids must share spacing).
inline double window_difference(const Field2D& u, const Field2D& w, double half_width)
{
    const auto [lo, hi] = window_columns(u.grid, half_width);
    double d = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
        const long k = std::lround((u.grid.x1(i) - w.grid.x1(0)) / w.grid.hx);
        if (k < 0 || k >= static_cast<long>(w.grid.nx)) continue;
        for (std::size_t j = 0; j < u.grid.ny; ++j) d = std::max(d, std::abs(u(i, j) - w(static_cast<std::size_t>(k), j)));
    }
    return d;
}

/// Minimum forward difference quotient in x1 over interior rows of columns lo..hi-1.
inline double min_dx1(const Field2D& u, std::size_t lo, std::size_t hi)
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = lo; i < hi; ++i)
        for (std::size_t j = 1; j + 1 < u.grid.ny; ++j) m = std::min(m, (u(i + 1, j) - u(i, j)) / u.grid.hx);
    return m;
}

inline double column_gap(const Field2D& u, std::size_t i, const Profile1D& p)
{
    double d = 0.0;
    for (std::size_t j = 0; j < u.grid.ny; ++j) d = std::max(d, std::abs(u(i, j) - p[j]));
    return d;
}

/// Column-wise Hamiltonian I(u(x1,.)) - 1/2 int |u_x1|^2 for interior columns,
/// with the h_x^2 correction of the three-point scheme in x1.
inline std::vector<double> hamiltonian_profile(const Field2D& u, const ProblemSpec& spec)
{
    const StripGrid& g = u.grid;
    const std::size_t nx = g.nx, ny = g.ny;
    const double hx = g.hx, hy = g.hy;
    std::vector<double> uxx(g.size(), 0.0);
    for (std::size_t i = 1; i + 1 < nx; ++i)
        for (std::size_t j = 1; j + 1 < ny; ++j) uxx[i * ny + j] = (u(i + 1, j) - 2.0 * u(i, j) + u(i - 1, j)) / (hx * hx);
    std::vector<double> out;
    out.reserve(nx - 2);
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        long double grad = 0.0L, pot = 0.0L, corr = 0.0L;
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            const long double d = static_cast<long double>(u(i, j + 1)) - u(i, j);
            grad += d * d;
        }
        for (std::size_t j = 0; j < ny; ++j) {
            const double w = detail::trapezoid_weight(j, ny);
            const double p = (u(i + 1, j) - u(i - 1, j)) / (2.0 * hx);
            pot += w * (0.5 * p * p + F(u(i, j), spec));
            double uxxx;
            if (i == 1) uxxx = (uxx[(i + 1) * ny + j] - uxx[i * ny + j]) / hx;
            else if (i + 2 == nx) uxxx = (uxx[i * ny + j] - uxx[(i - 1) * ny + j]) / hx;
            else uxxx = (uxx[(i + 1) * ny + j] - uxx[(i - 1) * ny + j]) / (2.0 * hx);
            const double a = uxx[i * ny + j];
            corr += w * (p * uxxx / 12.0 + a * a / 24.0);
        }
        out.push_back(static_cast<double>(0.5L * grad / hy - hy * pot + hx * hx * hy * corr));
    }
    return out;
}

struct ContinuationStep {
    double L = 0.0;
    double a = 0.0;
    double window_diff = std::numeric_limits<double>::quiet_NaN();
    std::pair<double, double> end_gaps{0.0, 0.0};
    int iterations = 0;
    double residual = 0.0;
    double energy = 0.0;
};

struct ContinuationSettings {
    std::vector<double> L_schedule{4.0, 8.0, 16.0};
    double hx = 1.0 / 64.0;
    double hy = 1.0 / 128.0;
    double tol_cont = 1e-4;
    double common_window = 4.0;
    double margin = 2.0;
    Settings2D solver;
};

struct HeteroclinicResult {
    Field2D field;
    double L = 0.0;
    double lambda = 0.0;
    /// Shift applied before the final polish and the residual shift left after it.
    double final_shift = 0.0;
    double residual_shift = 0.0;
    double min_dx1u = 0.0;
    double min_dx1u_window = 0.0;
    std::pair<double, double> end_gaps{0.0, 0.0};
    double hamiltonian_spread = 0.0;
    double hamiltonian_mean = 0.0;
    double residual = 0.0;
    double energy = 0.0;
    bool converged = false;
    std::vector<ContinuationStep> steps;
};

/// Fills the certificate fields of a result from its field.
inline void certify(HeteroclinicResult& r, const ProblemSpec& spec, const Profile1D& phi, const Profile1D& phibar,
                    double common_window = 4.0, double margin = 2.0)
{
    const StripGrid& g = r.field.grid;
    const auto [tlo, thi] = trusted_columns(g, margin);
    const auto [wlo, whi] = window_columns(g, common_window);
    r.L = g.L;
    r.min_dx1u = min_dx1(r.field, 0, g.nx - 1);
    r.min_dx1u_window = min_dx1(r.field, std::max(wlo, tlo), std::min(whi, thi));
    r.end_gaps = {column_gap(r.field, tlo, phi), column_gap(r.field, thi, phibar)};
    const std::vector<double> H = hamiltonian_profile(r.field, spec);
    std::vector<double> Ht(H.begin() + static_cast<std::ptrdiff_t>(tlo - 1), H.begin() + static_cast<std::ptrdiff_t>(thi));
    r.hamiltonian_spread = spread(Ht);
    long double sum = 0.0L;
    for (double v : Ht) sum += v;
    r.hamiltonian_mean = static_cast<double>(sum / static_cast<long double>(Ht.size()));
    r.residual = residual_norm_2d(r.field, spec);
    r.energy = energy_2d(r.field, spec, phi, phibar);
}

/// Minimize, normalize and extend along the L schedule; the last field is
/// polished after its shift so the returned field carries a residual certificate.
inline HeteroclinicResult continuation(const ProblemSpec& spec, const Profile1D& phi, const Profile1D& phibar,
                                       const ContinuationSettings& cs = {},
                                       const std::function<void(const ContinuationStep&)>& on_step = {})
{
    if (cs.L_schedule.empty()) throw Error(ErrorKind::InvalidArgument, "empty L schedule");
    for (std::size_t k = 1; k < cs.L_schedule.size(); ++k)
        if (!(cs.L_schedule[k] > cs.L_schedule[k - 1])) throw Error(ErrorKind::InvalidArgument, "L schedule must increase");

    HeteroclinicResult out;
    out.lambda = spec.lambda;
    std::optional<Field2D> prev;
    for (double L : cs.L_schedule) {
        const StripGrid g = StripGrid::make(L, cs.hx, cs.hy);
        detail::check_pair_grid(phi, phibar, g);
        const Field2D seed = prev ? extend_field(*prev, g, phi, phibar) : seed_field(phi, phibar, g);
        const Minimize2DResult m = minimize_2d(spec, phi, phibar, seed, cs.solver);
        if (!m.converged)
            throw Error(ErrorKind::NonConvergence, "strip minimization at L=" + std::to_string(L) + " stopped with residual " +
                                                       std::to_string(m.residual));
        ShiftResult sh = reference_shift(m.field, phi, phibar);
        ContinuationStep step;
        step.L = L;
        step.a = sh.a;
        step.iterations = m.iterations;
        step.residual = m.residual;
        step.energy = m.energy;
        const auto [tlo, thi] = trusted_columns(g, cs.margin);
        step.end_gaps = {column_gap(sh.shifted, tlo, phi), column_gap(sh.shifted, thi, phibar)};
        if (prev) step.window_diff = window_difference(sh.shifted, *prev, cs.common_window);
        out.steps.push_back(step);
        if (on_step) on_step(step);
        prev = std::move(sh.shifted);
    }

    const Minimize2DResult polish = minimize_2d(spec, phi, phibar, *prev, cs.solver);
    if (!polish.converged) throw Error(ErrorKind::NonConvergence, "final polish did not converge");
    out.field = polish.field;
    out.final_shift = out.steps.back().a;
    const std::vector<double> tr = detail::mid_height_trace(out.field);
    {
        const double target = 0.5 * (detail::mid_value(phi) + detail::mid_value(phibar));
        const StripGrid& g = out.field.grid;
        std::size_t k = 0;
        while (k + 2 < g.nx && tr[k + 1] < target) ++k;
        out.residual_shift = g.x1(k) + g.hx * (target - tr[k]) / (tr[k + 1] - tr[k]);
    }
    certify(out, spec, phi, phibar, cs.common_window, cs.margin);
    const double last = out.steps.size() > 1 ? out.steps.back().window_diff : 0.0;
    out.converged = last <= cs.tol_cont;
    if (!out.converged)
        throw Error(ErrorKind::NoConvergenceAcrossL, "common-window difference " + std::to_string(last) + " exceeds tol_cont");
    return out;
}

} // namespace ltc
