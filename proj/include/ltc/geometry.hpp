#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "ltc/error.hpp"
#include "ltc/eulerflow.hpp"
#include "ltc/parallel.hpp"
#include "ltc/strip2d.hpp"

namespace ltc {

struct Point {
    double x1 = 0.0;
    double x2 = 0.0;

    friend bool operator==(const Point& a, const Point& b) { return a.x1 == b.x1 && a.x2 == b.x2; }
};

struct Polyline {
    std::vector<Point> points;
    bool closed = false;

    /// Appends p unless it repeats the last point.
    void push(const Point& p)
    {
        if (points.empty() || !(points.back() == p)) points.push_back(p);
    }
};

/// Bilinear interpolation of nodal values; points outside the strip are clamped onto it.
inline double bilinear(const StripGrid& g, const std::vector<double>& a, double x1, double x2)
{
    const double sx = std::clamp((x1 + g.L) / g.hx, 0.0, static_cast<double>(g.nx - 1));
    const double sy = std::clamp(x2 / g.hy, 0.0, static_cast<double>(g.ny - 1));
    std::size_t i = static_cast<std::size_t>(std::floor(sx));
    std::size_t j = static_cast<std::size_t>(std::floor(sy));
    if (i + 1 >= g.nx) i = g.nx - 2;
    if (j + 1 >= g.ny) j = g.ny - 2;
    const double tx = sx - static_cast<double>(i), ty = sy - static_cast<double>(j);
    const double a00 = a[i * g.ny + j], a10 = a[(i + 1) * g.ny + j];
    const double a01 = a[i * g.ny + j + 1], a11 = a[(i + 1) * g.ny + j + 1];
    return (1.0 - tx) * ((1.0 - ty) * a00 + ty * a01) + tx * ((1.0 - ty) * a10 + ty * a11);
}

inline double bilinear(const Field2D& u, double x1, double x2) { return bilinear(u.grid, u.values, x1, x2); }

/// Marching squares on the bilinear interpolant; a node counts as inside when
/// its value is >= alpha. Open curves come first, each started from its
/// lowest-numbered end, then closed loops.
inline std::vector<Polyline> level_curve(const Field2D& u, double alpha)
{
    const StripGrid& g = u.grid;
    const auto [mn, mx] = std::minmax_element(u.values.begin(), u.values.end());
    if (!(alpha >= *mn && alpha <= *mx)) throw Error(ErrorKind::EmptyLevelSet, "alpha outside the range of u");
    const std::size_t nx = g.nx, ny = g.ny;
    auto inside = [&](std::size_t i, std::size_t j) { return u(i, j) >= alpha; };
    // edge keys: 2*(i*ny+j) for (i,j)-(i+1,j), 2*(i*ny+j)+1 for (i,j)-(i,j+1)
    std::map<std::size_t, Point> pts;
    std::map<std::size_t, std::vector<std::size_t>> adj;
    auto crossing = [&](std::size_t key) -> std::optional<std::size_t> {
        const std::size_t node = key / 2;
        const std::size_t i = node / ny, j = node % ny;
        const bool horiz = (key % 2) == 0;
        const std::size_t i2 = horiz ? i + 1 : i, j2 = horiz ? j : j + 1;
        if (inside(i, j) == inside(i2, j2)) return std::nullopt;
        if (!pts.count(key)) {
            const double a = u(i, j), b = u(i2, j2);
            const double t = (alpha - a) / (b - a);
            pts[key] = horiz ? Point{g.x1(i) + t * g.hx, g.x2(j)} : Point{g.x1(i), g.x2(j) + t * g.hy};
        }
        return key;
    };
    auto link = [&](std::size_t a, std::size_t b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };
    for (std::size_t i = 0; i + 1 < nx; ++i)
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            const std::size_t bottom = 2 * (i * ny + j), top = 2 * (i * ny + j + 1);
            const std::size_t left = 2 * (i * ny + j) + 1, right = 2 * ((i + 1) * ny + j) + 1;
            std::vector<std::size_t> c;
            for (std::size_t k : {bottom, right, top, left})
                if (auto e = crossing(k)) c.push_back(*e);
            if (c.size() == 2) link(c[0], c[1]);
            else if (c.size() == 4) {
                const double centre = 0.25 * (u(i, j) + u(i + 1, j) + u(i, j + 1) + u(i + 1, j + 1));
                // bottom-left corner inside and centre inside: the inside region connects
                // bottom-left to top-right, so cut the other two corners
                if ((centre >= alpha) == inside(i, j)) {
                    link(bottom, right);
                    link(top, left);
                } else {
                    link(bottom, left);
                    link(right, top);
                }
            }
        }
    std::vector<Polyline> out;
    std::map<std::size_t, bool> used;
    auto walk = [&](std::size_t start) {
        Polyline pl;
        std::size_t prev = start, cur = start;
        pl.push(pts[cur]);
        used[cur] = true;
        for (;;) {
            std::optional<std::size_t> next;
            for (std::size_t n : adj[cur])
                if (!used[n]) {
                    next = n;
                    break;
                }
            if (!next) {
                for (std::size_t n : adj[cur])
                    if (n == start && cur != start && prev != start) pl.closed = true;
                break;
            }
            prev = cur;
            cur = *next;
            used[cur] = true;
            pl.push(pts[cur]);
        }
        if (pl.closed && pl.points.size() > 1 && pl.points.front() == pl.points.back()) pl.points.pop_back();
        return pl;
    };
    for (const auto& [k, nb] : adj)
        if (nb.size() == 1 && !used[k]) out.push_back(walk(k));
    for (const auto& [k, nb] : adj)
        if (!used[k]) out.push_back(walk(k));
    return out;
}

struct ConvexityWitness {
    Point p, q, mid;
    double alpha = 0.0;
    double u_p = 0.0, u_q = 0.0, u_mid = 0.0;
    std::size_t pairs_tested = 0;
    bool directed = true;

    /// Re-evaluates the three inequalities with the given margin.
    bool validate(const Field2D& u, double tol) const
    {
        const double a = bilinear(u, p.x1, p.x2), b = bilinear(u, q.x1, q.x2), c = bilinear(u, mid.x1, mid.x2);
        const bool is_mid = std::abs(mid.x1 - 0.5 * (p.x1 + q.x1)) <= 1e-12 && std::abs(mid.x2 - 0.5 * (p.x2 + q.x2)) <= 1e-12;
        return is_mid && a >= alpha + tol && b >= alpha + tol && c <= alpha - tol;
    }
};

struct WitnessSettings {
    double tol = 1e-4;
    std::size_t budget = 100000;
    std::uint64_t seed = 0x5EED;
    double margin = 2.0;
    unsigned threads = 1;
};

/// Searches for p, q in {u > alpha} whose midpoint lies in {u < alpha}, all with
/// margin tol. Directed phase: band-edge and column-maximum nodes of pairs of
/// trusted columns; fallback: uniform random pairs of superlevel nodes.
inline std::optional<ConvexityWitness> find_nonconvexity_witness(const Field2D& u, double alpha, const WitnessSettings& s = {})
{
    const StripGrid& g = u.grid;
    const auto [lo, hi] = trusted_columns(g, s.margin);
    const double thr = alpha + s.tol;
    auto node = [&](std::size_t i, std::size_t j) { return Point{g.x1(i), g.x2(j)}; };

    struct Column {
        std::size_t i;
        std::vector<std::size_t> rows;
    };
    std::vector<Column> cols;
    for (std::size_t i = lo; i <= hi; ++i) {
        std::optional<std::size_t> first, last, arg;
        for (std::size_t j = 0; j < g.ny; ++j) {
            if (u(i, j) >= thr) {
                if (!first) first = j;
                last = j;
                if (!arg || u(i, j) > u(i, *arg)) arg = j;
            }
        }
        if (!first) continue;
        Column c{i, {*first}};
        if (*last != *first) c.rows.push_back(*last);
        if (*arg != *first && *arg != *last) c.rows.push_back(*arg);
        cols.push_back(std::move(c));
    }

    auto test = [&](const Point& p, const Point& q, std::size_t tested, bool directed) -> std::optional<ConvexityWitness> {
        const Point m{0.5 * (p.x1 + q.x1), 0.5 * (p.x2 + q.x2)};
        const double um = bilinear(u, m.x1, m.x2);
        if (um > alpha - s.tol) return std::nullopt;
        ConvexityWitness w{p, q, m, alpha, bilinear(u, p.x1, p.x2), bilinear(u, q.x1, q.x2), um, tested, directed};
        return w;
    };

    std::size_t tested = 0;
    if (cols.size() >= 2) {
        // stride keeps the directed phase within half the budget
        const std::size_t half = std::max<std::size_t>(s.budget / 2, 1);
        std::size_t stride = 1;
        while (true) {
            const std::size_t n = (cols.size() + stride - 1) / stride;
            if (n * (n - 1) / 2 * 9 <= half || n <= 2) break;
            ++stride;
        }
        std::vector<std::size_t> pick;
        for (std::size_t k = 0; k < cols.size(); k += stride) pick.push_back(k);
        std::vector<std::optional<ConvexityWitness>> hit(pick.size());
        std::vector<std::size_t> count(pick.size(), 0);
        parallel_for(pick.size(), s.threads, [&](std::size_t a) {
            const Column& cp = cols[pick[a]];
            for (std::size_t b = a + 1; b < pick.size() && !hit[a]; ++b) {
                const Column& cq = cols[pick[b]];
                for (std::size_t jp : cp.rows) {
                    for (std::size_t jq : cq.rows) {
                        ++count[a];
                        if (auto w = test(node(cp.i, jp), node(cq.i, jq), 0, true)) {
                            hit[a] = w;
                            break;
                        }
                    }
                    if (hit[a]) break;
                }
            }
        });
        for (std::size_t a = 0; a < pick.size(); ++a) {
            tested += count[a];
            if (hit[a]) {
                hit[a]->pairs_tested = tested;
                return hit[a];
            }
        }
    }

    std::vector<Point> pool;
    for (std::size_t i = lo; i <= hi; ++i)
        for (std::size_t j = 0; j < g.ny; ++j)
            if (u(i, j) >= thr) pool.push_back(node(i, j));
    if (pool.size() < 2) return std::nullopt;
    std::mt19937_64 rng(s.seed);
    const std::uint64_t n = pool.size();
    while (tested < s.budget) {
        // modulo bias is irrelevant here and keeps the draw sequence portable
        const Point& p = pool[static_cast<std::size_t>(rng() % n)];
        const Point& q = pool[static_cast<std::size_t>(rng() % n)];
        ++tested;
        if (auto w = test(p, q, tested, false)) return w;
    }
    return std::nullopt;
}

/// Fixed-step RK4 on dx/dt = v(x) with bilinear velocity; stops before leaving
/// the strip, at stagnation or after max_steps.
inline std::vector<Polyline> trace_streamlines(const FlowField& v, const std::vector<Point>& seeds, double step,
                                               std::size_t max_steps = 20000, double eps_stag = -1.0)
{
    if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "streamline step must be positive");
    const StripGrid& g = v.grid;
    if (eps_stag < 0.0) eps_stag = default_eps_stag(v);
    auto vel = [&](const Point& p) { return std::array<double, 2>{bilinear(g, v.v1, p.x1, p.x2), bilinear(g, v.v2, p.x1, p.x2)}; };
    auto inside = [&](const Point& p) { return p.x1 >= -g.L && p.x1 <= g.L && p.x2 >= 0.0 && p.x2 <= 1.0; };
    std::vector<Polyline> out;
    for (const Point& s0 : seeds) {
        Polyline pl;
        Point p = s0;
        if (!inside(p)) {
            out.push_back(pl);
            continue;
        }
        pl.push(p);
        for (std::size_t n = 0; n < max_steps; ++n) {
            const auto k1 = vel(p);
            if (std::hypot(k1[0], k1[1]) <= eps_stag) break;
            const auto k2 = vel({p.x1 + 0.5 * step * k1[0], p.x2 + 0.5 * step * k1[1]});
            const auto k3 = vel({p.x1 + 0.5 * step * k2[0], p.x2 + 0.5 * step * k2[1]});
            const auto k4 = vel({p.x1 + step * k3[0], p.x2 + step * k3[1]});
            const Point next{p.x1 + step / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                             p.x2 + step / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
            if (!inside(next)) break;
            p = next;
            pl.push(p);
        }
        out.push_back(std::move(pl));
    }
    return out;
}

} // namespace ltc
