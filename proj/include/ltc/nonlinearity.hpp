#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "ltc/error.hpp"

namespace ltc {

enum class Mode { RampC1, ZeroC0 };

inline std::string_view to_string(Mode m)
{
    return m == Mode::RampC1 ? "RampC1" : "ZeroC0";
}

inline Mode parse_mode(std::string_view s)
{
    if (s == "ramp" || s == "RampC1" || s == "c1" || s == "C1") return Mode::RampC1;
    if (s == "zero" || s == "ZeroC0" || s == "c0" || s == "C0") return Mode::ZeroC0;
    throw Error(ErrorKind::Config, "unknown mode '" + std::string(s) + "' (expected ramp or zero)");
}

/// Value of the stream function on the top wall.
constexpr double top_value(Mode m) { return m == Mode::RampC1 ? 1.0 : 0.0; }

/// Energy of the trivial profile in the continuum.
constexpr double energy_threshold(Mode m) { return m == Mode::RampC1 ? 0.5 : -1.0 / 6.0; }

inline double trivial_profile(Mode m, double t)
{
    return m == Mode::RampC1 ? t : t * (1.0 - t);
}

struct ProblemSpec {
    Mode mode = Mode::RampC1;
    double lambda = 0.0;
};

namespace cutoff {

/// Identifies the blend used for chi; echoed into reports.
inline constexpr std::string_view construction_tag = "exp-blend:t0=1,t1=2,eta=exp(-1/t),guard=1e-12";

inline constexpr double transition_lo = 1.0;
inline constexpr double transition_hi = 2.0;
inline constexpr double eta_guard = 1e-12;

struct Jet {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

inline Jet eta(double t)
{
    if (!(t > eta_guard)) return {};
    const double e = std::exp(-1.0 / t);
    const double t2 = t * t;
    return {e, e / t2, e * (1.0 - 2.0 * t) / (t2 * t2)};
}

/// chi together with its first two derivatives.
inline Jet chi_jet(double s)
{
    if (s <= transition_lo) return {};
    if (s >= transition_hi) return {s - 1.0, 1.0, 0.0};
    const Jet a = eta(s - transition_lo);
    Jet b = eta(transition_hi - s);
    b.d1 = -b.d1;
    const double sum = a.value + b.value;
    const double num1 = a.d1 * b.value - a.value * b.d1;
    const double w = a.value / sum;
    const double w1 = num1 / (sum * sum);
    const double w2 = (a.d2 * b.value - a.value * b.d2) / (sum * sum)
                      - 2.0 * num1 * (a.d1 + b.d1) / (sum * sum * sum);
    const double x = s - 1.0;
    return {x * w, w + x * w1, 2.0 * w1 + x * w2};
}

} // namespace cutoff

inline double chi(double s) { return cutoff::chi_jet(s).value; }
inline double chi_prime(double s) { return cutoff::chi_jet(s).d1; }
inline double chi_second(double s) { return cutoff::chi_jet(s).d2; }

/// Potential and its two derivatives at one point.
struct PotentialJet {
    double F = 0.0;
    double f = 0.0;
    double df = 0.0;
};

inline PotentialJet potential(double s, const ProblemSpec& spec)
{
    const cutoff::Jet c = cutoff::chi_jet(s);
    const double lam = spec.lambda;
    const double c2 = c.value * c.value;
    const double c3 = c2 * c.value;
    PotentialJet p;
    p.F = c3 - lam * c2 * c2;
    const double g = 3.0 * c2 - 4.0 * lam * c3;
    p.f = c.d1 * g;
    p.df = c.d2 * g + c.d1 * c.d1 * (6.0 * c.value - 12.0 * lam * c2);
    if (spec.mode == Mode::ZeroC0) {
        p.F += 2.0 * s;
        p.f += 2.0;
    }
    return p;
}

inline double F(double s, const ProblemSpec& spec) { return potential(s, spec).F; }
inline double f(double s, const ProblemSpec& spec) { return potential(s, spec).f; }
inline double f_prime(double s, const ProblemSpec& spec) { return potential(s, spec).df; }

} // namespace ltc
