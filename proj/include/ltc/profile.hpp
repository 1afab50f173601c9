#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ltc/error.hpp"
#include "ltc/nonlinearity.hpp"

namespace ltc {

/// Samples psi(t_j), t_j = j/m, j = 0..m.
struct Profile1D {
    std::vector<double> values;

    std::size_t cells() const { return values.empty() ? 0 : values.size() - 1; }
    double spacing() const { return 1.0 / static_cast<double>(cells()); }
    double t(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(cells()); }
    double operator[](std::size_t j) const { return values[j]; }
    double& operator[](std::size_t j) { return values[j]; }

    double sup_norm() const
    {
        double s = 0.0;
        for (double v : values) s = std::max(s, std::abs(v));
        return s;
    }
};

inline Profile1D make_profile(std::size_t m, const std::function<double(double)>& fn)
{
    if (m < 2) throw Error(ErrorKind::InvalidArgument, "profile needs at least 2 cells");
    Profile1D p;
    p.values.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) p.values[j] = fn(static_cast<double>(j) / static_cast<double>(m));
    return p;
}

/// Trivial solution with boundary values set exactly.
inline Profile1D trivial(Mode mode, std::size_t m)
{
    Profile1D p = make_profile(m, [mode](double t) { return trivial_profile(mode, t); });
    p.values.front() = 0.0;
    p.values.back() = top_value(mode);
    return p;
}

inline void check_boundary(const Profile1D& p, Mode mode)
{
    if (p.values.size() < 3) throw Error(ErrorKind::InvalidArgument, "profile has fewer than 3 nodes");
    if (p.values.front() != 0.0 || p.values.back() != top_value(mode))
        throw Error(ErrorKind::InvalidArgument, "profile boundary values do not match mode " + std::string(to_string(mode)));
    for (double v : p.values)
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "profile has non-finite values");
}

inline double max_abs_diff(const Profile1D& a, const Profile1D& b)
{
    double d = 0.0;
    for (std::size_t j = 0; j < a.values.size(); ++j) d = std::max(d, std::abs(a.values[j] - b.values[j]));
    return d;
}

/// Linear resampling onto m cells; endpoint values are copied exactly.
inline Profile1D resample(const Profile1D& p, std::size_t m)
{
    const std::size_t n = p.cells();
    Profile1D out;
    out.values.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
        if (n % m == 0) {
            out.values[j] = p.values[j * (n / m)];
            continue;
        }
        const double x = static_cast<double>(j) * static_cast<double>(n) / static_cast<double>(m);
        std::size_t k = static_cast<std::size_t>(std::floor(x));
        if (k >= n) k = n - 1;
        const double s = x - static_cast<double>(k);
        out.values[j] = (1.0 - s) * p.values[k] + s * p.values[k + 1];
    }
    out.values.front() = p.values.front();
    out.values.back() = p.values.back();
    return out;
}

} // namespace ltc
