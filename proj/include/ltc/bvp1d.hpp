#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "ltc/error.hpp"
#include "ltc/nonlinearity.hpp"
#include "ltc/parallel.hpp"
#include "ltc/profile.hpp"

namespace ltc {

struct SolverSettings1D {
    /// Bound on the nodal EL residual max|R|.
    double tol_residual = 1e-10;
    /// Relative size of a pure Newton step that certifies convergence once
    /// the nodal residual sits at its roundoff floor (~eps |psi| / h^2).
    double tol_step = 1e-11;
    int max_iter = 200;
    /// Iterates above this sup-norm are reported as divergent.
    double blowup = 1e8;
};

enum class SolveStatus { Converged, MaxIterations, Stalled, Diverged };

inline const char* to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::Diverged: return "diverged";
    }
    return "?";
}

struct SolveResult1D {
    Profile1D profile;
    SolveStatus status = SolveStatus::MaxIterations;
    int iterations = 0;
    double energy = 0.0;
    double residual = 0.0;
    double scaled_residual = 0.0;
    std::vector<double> energy_history;

    bool converged() const { return status == SolveStatus::Converged; }
};

namespace detail {

struct EnergyParts {
    double value = 0.0;
    double magnitude = 0.0; // sum of absolute contributions, sets the roundoff scale
};

inline EnergyParts energy_parts(const std::vector<double>& v, const ProblemSpec& spec)
{
    const std::size_t m = v.size() - 1;
    const double h = 1.0 / static_cast<double>(m);
    long double grad = 0.0L;
    for (std::size_t j = 0; j < m; ++j) {
        const long double d = static_cast<long double>(v[j + 1]) - v[j];
        grad += d * d;
    }
    long double pot = 0.0L, pot_abs = 0.0L;
    for (std::size_t j = 0; j <= m; ++j) {
        const long double w = (j == 0 || j == m) ? 0.5L : 1.0L;
        const double Fj = F(v[j], spec);
        pot += w * Fj;
        pot_abs += w * std::abs(Fj);
    }
    const long double g = 0.5L * grad / h;
    return {static_cast<double>(g - h * pot), static_cast<double>(g + h * pot_abs)};
}

/// Solves (T + diag(a - 2)) x = rhs in place, T = tridiag(-1, 2, -1), via
/// LDL^T. Returns false when a pivot is not positive.
inline bool spd_tridiag_solve(std::vector<double>& a, std::vector<double>& rhs)
{
    const std::size_t n = a.size();
    if (!(a[0] > 0.0)) return false;
    for (std::size_t k = 1; k < n; ++k) {
        const double inv = 1.0 / a[k - 1];
        a[k] -= inv;
        rhs[k] += rhs[k - 1] * inv;
        if (!(a[k] > 0.0)) return false;
    }
    rhs[n - 1] /= a[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) rhs[k] = (rhs[k] + rhs[k + 1]) / a[k];
    return true;
}

inline bool lexicographic_less(const Profile1D& a, const Profile1D& b)
{
    return std::lexicographical_compare(a.values.begin(), a.values.end(), b.values.begin(), b.values.end());
}

} // namespace detail

/// Discrete energy: forward differences for the gradient, trapezoid for the potential.
inline double energy_1d(const Profile1D& psi, const ProblemSpec& spec)
{
    check_boundary(psi, spec.mode);
    return detail::energy_parts(psi.values, spec).value;
}

/// Nodal residual -D2 psi - f(psi) at interior nodes (zero at the ends).
inline std::vector<double> el_residual(const Profile1D& psi, const ProblemSpec& spec)
{
    const std::size_t m = psi.cells();
    const double h = psi.spacing();
    const double inv_h2 = 1.0 / (h * h);
    std::vector<double> r(m + 1, 0.0);
    for (std::size_t j = 1; j < m; ++j)
        r[j] = (2.0 * psi[j] - psi[j - 1] - psi[j + 1]) * inv_h2 - f(psi[j], spec);
    return r;
}

inline double el_residual_norm(const Profile1D& psi, const ProblemSpec& spec)
{
    double r = 0.0;
    for (double v : el_residual(psi, spec)) r = std::max(r, std::abs(v));
    return r;
}

/// Levenberg-shifted Newton on the discrete EL system with an energy line search.
inline SolveResult1D solve_el(const ProblemSpec& spec, const Profile1D& seed, const SolverSettings1D& settings = {})
{
    check_boundary(seed, spec.mode);
    const std::size_t m = seed.cells();
    const std::size_t n = m - 1;
    const double h = seed.spacing();
    const double h2 = h * h;
    constexpr double eps = std::numeric_limits<double>::epsilon();

    SolveResult1D out;
    out.profile = seed;
    std::vector<double>& v = out.profile.values;
    detail::EnergyParts E = detail::energy_parts(v, spec);
    out.energy_history.push_back(E.value);

    std::vector<double> R(m + 1), dfv(m + 1), a(n), d(n), trial;
    double sigma = 0.0;
    const double sigma_floor = 1e-6 * 2.0;
    bool small_newton_step = false;

    for (int it = 0;; ++it) {
        double res = 0.0, sup = 0.0;
        for (std::size_t j = 1; j < m; ++j) {
            const PotentialJet p = potential(v[j], spec);
            R[j] = (2.0 * v[j] - v[j - 1] - v[j + 1]) / h2 - p.f;
            dfv[j] = p.df;
            res = std::max(res, std::abs(R[j]));
        }
        for (double x : v) sup = std::max(sup, std::abs(x));
        out.residual = res;
        out.scaled_residual = h2 * res / std::max(1.0, sup);
        out.iterations = it;
        out.energy = E.value;
        if (res <= settings.tol_residual || small_newton_step) {
            out.status = SolveStatus::Converged;
            break;
        }
        if (!(sup <= settings.blowup)) {
            out.status = SolveStatus::Diverged;
            break;
        }
        if (it >= settings.max_iter) {
            out.status = SolveStatus::MaxIterations;
            break;
        }

        bool stepped = false;
        while (!stepped) {
            for (;;) {
                for (std::size_t k = 0; k < n; ++k) {
                    a[k] = 2.0 - h2 * dfv[k + 1] + sigma;
                    d[k] = -h2 * R[k + 1];
                }
                if (detail::spd_tridiag_solve(a, d)) break;
                sigma = std::max(10.0 * sigma, sigma_floor);
            }
            double t = 1.0;
            for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
                trial = v;
                for (std::size_t k = 0; k < n; ++k) trial[k + 1] += t * d[k];
                const detail::EnergyParts Et = detail::energy_parts(trial, spec);
                const double slack = 64.0 * eps * std::max(E.magnitude, Et.magnitude);
                if (Et.value <= E.value + slack) {
                    v.swap(trial);
                    E = Et;
                    stepped = true;
                    break;
                }
            }
            if (stepped) {
                out.energy_history.push_back(E.value);
                double dmax = 0.0;
                for (double x : d) dmax = std::max(dmax, std::abs(x));
                small_newton_step = sigma == 0.0 && t == 1.0 && dmax <= settings.tol_step * std::max(1.0, sup);
                if (t == 1.0)
                    sigma = sigma <= sigma_floor ? 0.0 : 0.1 * sigma;
                else
                    sigma = std::max(10.0 * sigma, sigma_floor);
            } else {
                if (sigma > 1e12) break;
                sigma = std::max(100.0 * sigma, sigma_floor);
            }
        }
        if (!stepped) {
            out.status = SolveStatus::Stalled;
            break;
        }
    }
    return out;
}

/// Trapezoid integral of chi(psi)^4, the lambda-derivative of the discrete energy.
inline double lambda_slope(const Profile1D& psi)
{
    const std::size_t m = psi.cells();
    long double s = 0.0L;
    for (std::size_t j = 0; j <= m; ++j) {
        const double c = chi(psi[j]);
        const long double w = (j == 0 || j == m) ? 0.5L : 1.0L;
        s += w * c * c * c * c;
    }
    return static_cast<double>(s * psi.spacing());
}

struct Basin {
    Profile1D profile;
    double energy = 0.0;
    double sup_norm = 0.0;
    bool nontrivial = false;
    std::vector<int> starts;
};

struct GlobalMin1D {
    double m_lambda = 0.0;
    Profile1D argmin;
    bool argmin_converged = false;
    int argmin_start = -1;
    std::vector<SolveResult1D> runs;
    std::vector<Basin> basins; // distinct converged profiles, ascending energy

    std::size_t nontrivial_count() const
    {
        return static_cast<std::size_t>(std::count_if(basins.begin(), basins.end(), [](const Basin& b) { return b.nontrivial; }));
    }
};

inline const std::vector<double>& multistart_amplitudes()
{
    static const std::vector<double> mu{2.0, 5.0, 10.0, 20.0, 40.0};
    return mu;
}

inline std::vector<Profile1D> multistart_seeds(Mode mode, std::size_t m)
{
    std::vector<Profile1D> seeds{trivial(mode, m)};
    const double pi = std::acos(-1.0);
    for (double mu : multistart_amplitudes()) {
        Profile1D p = make_profile(m, [&](double t) {
            const double w = mode == Mode::RampC1 ? std::sin(pi * t) : t * (1.0 - t);
            return trivial_profile(mode, t) + mu * w;
        });
        p.values.front() = 0.0;
        p.values.back() = top_value(mode);
        seeds.push_back(std::move(p));
    }
    return seeds;
}

/// Distance to the trivial profile above which a profile counts as nontrivial.
inline constexpr double nontrivial_threshold = 1e-6;

/// Multistart minimization. m_lambda is the lowest energy over all final
/// iterates; each is an upper bound for the infimum, so divergent descent
/// (e.g. lambda = 0) still yields a meaningful value.
inline GlobalMin1D global_min_1d(const ProblemSpec& spec, std::size_t m, const SolverSettings1D& settings = {},
                                 unsigned threads = 1)
{
    const std::vector<Profile1D> seeds = multistart_seeds(spec.mode, m);
    GlobalMin1D out;
    out.runs.resize(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t i) { out.runs[i] = solve_el(spec, seeds[i], settings); });

    bool any_converged = false;
    const Profile1D phi = trivial(spec.mode, m);
    for (std::size_t i = 0; i < out.runs.size(); ++i) {
        const SolveResult1D& r = out.runs[i];
        const bool better = out.argmin_start < 0 || r.energy < out.m_lambda ||
                            (r.energy == out.m_lambda && detail::lexicographic_less(r.profile, out.argmin));
        if (better) {
            out.m_lambda = r.energy;
            out.argmin = r.profile;
            out.argmin_converged = r.converged();
            out.argmin_start = static_cast<int>(i);
        }
        if (!r.converged()) continue;
        any_converged = true;
        const double sup = r.profile.sup_norm();
        auto same = std::find_if(out.basins.begin(), out.basins.end(), [&](const Basin& b) {
            return max_abs_diff(b.profile, r.profile) <= 1e-6 * std::max(1.0, sup);
        });
        if (same != out.basins.end()) {
            same->starts.push_back(static_cast<int>(i));
            continue;
        }
        Basin b;
        b.profile = r.profile;
        b.energy = r.energy;
        b.sup_norm = sup;
        b.nontrivial = max_abs_diff(r.profile, phi) > nontrivial_threshold * std::max(1.0, sup);
        b.starts.push_back(static_cast<int>(i));
        out.basins.push_back(std::move(b));
    }
    if (!any_converged) throw Error(ErrorKind::NonConvergence, "every multistart run failed to converge");
    std::stable_sort(out.basins.begin(), out.basins.end(), [](const Basin& a, const Basin& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return detail::lexicographic_less(a.profile, b.profile);
    });
    return out;
}

struct LambdaStarSettings {
    double tol_lambda = 1e-6;
    double margin = 1e-4;
    int k_min = -10;
    int k_max = 20;
    /// Replaces the discrete trivial energy as the comparison level.
    std::optional<double> threshold;
    unsigned threads = 1;
};

struct LambdaScanRow {
    double lambda = 0.0;
    double m_lambda = 0.0;
    std::size_t basin_count = 0;
    std::vector<double> sup_norms;
    bool predicate = false;
};

struct LambdaStarResult {
    Mode mode = Mode::RampC1;
    std::size_t m = 0;
    double lambda_star = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double threshold = 0.0;
    int transitions = 0;
    int bisection_steps = 0;
    std::vector<LambdaScanRow> scan;
    std::vector<LambdaScanRow> bisection;
};

inline double discrete_threshold(Mode mode, std::size_t m)
{
    return energy_1d(trivial(mode, m), ProblemSpec{mode, 0.0});
}

inline LambdaScanRow scan_row(Mode mode, std::size_t m, double lambda, double threshold, double margin,
                              const SolverSettings1D& solver, unsigned threads)
{
    const GlobalMin1D g = global_min_1d(ProblemSpec{mode, lambda}, m, solver, threads);
    LambdaScanRow row;
    row.lambda = lambda;
    row.m_lambda = g.m_lambda;
    row.basin_count = g.basins.size();
    for (const Basin& b : g.basins) row.sup_norms.push_back(b.sup_norm);
    row.predicate = g.m_lambda < threshold - margin;
    return row;
}

/// Geometric scan over lambda = 2^k followed by bisection on the predicate
/// m_lambda < threshold - margin.
inline LambdaStarResult find_lambda_star(Mode mode, std::size_t m, const LambdaStarSettings& s = {},
                                         const SolverSettings1D& solver = {})
{
    LambdaStarResult out;
    out.mode = mode;
    out.m = m;
    out.threshold = s.threshold ? *s.threshold : discrete_threshold(mode, m);
    for (int k = s.k_min; k <= s.k_max; ++k)
        out.scan.push_back(scan_row(mode, m, std::ldexp(1.0, k), out.threshold, s.margin, solver, s.threads));

    std::optional<std::size_t> flip;
    for (std::size_t i = 1; i < out.scan.size(); ++i) {
        if (out.scan[i].predicate != out.scan[i - 1].predicate) ++out.transitions;
        if (!flip && out.scan[i - 1].predicate && !out.scan[i].predicate) flip = i;
    }
    if (!flip) throw Error(ErrorKind::BracketNotFound, "predicate never flips from true to false over the lambda scan");

    double lo = out.scan[*flip - 1].lambda;
    double hi = out.scan[*flip].lambda;
    while (hi - lo > s.tol_lambda) {
        const double mid = 0.5 * (lo + hi);
        LambdaScanRow row = scan_row(mode, m, mid, out.threshold, s.margin, solver, s.threads);
        (row.predicate ? lo : hi) = mid;
        out.bisection.push_back(std::move(row));
        ++out.bisection_steps;
    }
    out.lo = lo;
    out.hi = hi;
    out.lambda_star = 0.5 * (lo + hi);
    return out;
}

struct PairSettings {
    double tol_energy = 1e-8;
    /// Target for |E(phibar) - threshold| when tying the energies exactly.
    double tie_tol = 1e-13;
    int max_tie_iter = 60;
};

struct MinimizerPair {
    Mode mode = Mode::RampC1;
    Profile1D phi;
    Profile1D phibar;
    /// lambda at which the nontrivial branch ties the threshold exactly.
    double lambda_star = 0.0;
    /// lambda at which phibar was computed (equal to lambda_star for tied pairs).
    double lambda = 0.0;
    double energy = 0.0;
    double threshold = 0.0;
    std::vector<double> cauchy; // max-norm differences of the approach sequence
    std::vector<Profile1D> alternatives;
    bool ambiguous = false;
};

struct TieResult {
    double lambda = 0.0;
    Profile1D profile;
    double gap = 0.0;
    double slope = 0.0;
    int iterations = 0;
};

/// Newton iteration in lambda along the nontrivial branch so that its energy
/// equals `threshold`, safeguarded by the bracket [lo, hi].
inline TieResult tie_energy(Mode mode, const Profile1D& seed, double lambda0, double threshold, double lo, double hi,
                            const PairSettings& ps, const SolverSettings1D& solver)
{
    const Profile1D phi = trivial(mode, seed.cells());
    auto nontrivial = [&](const Profile1D& p) { return max_abs_diff(p, phi) > nontrivial_threshold * std::max(1.0, p.sup_norm()); };

    Profile1D lo_profile = seed;
    Profile1D cur = seed;
    double lambda = lambda0;
    TieResult out;
    for (int it = 0; it < ps.max_tie_iter; ++it) {
        const SolveResult1D r = solve_el(ProblemSpec{mode, lambda}, cur, solver);
        out.iterations = it + 1;
        if (!r.converged() || !nontrivial(r.profile)) {
            // left the branch: treat as above the tie and retreat
            hi = lambda;
            cur = lo_profile;
            lambda = 0.5 * (lo + hi);
            continue;
        }
        const double gap = r.energy - threshold;
        const double slope = lambda_slope(r.profile);
        out.lambda = lambda;
        out.profile = r.profile;
        out.gap = gap;
        out.slope = slope;
        if (std::abs(gap) <= ps.tie_tol * std::max(1.0, std::abs(threshold))) return out;
        if (gap < 0.0) {
            lo = lambda;
            lo_profile = r.profile;
        } else {
            hi = lambda;
        }
        double next = slope > 0.0 ? lambda - gap / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * lambda;
        if (next == lambda) return out;
        lambda = next;
        cur = r.profile;
    }
    if (out.profile.values.empty()) throw Error(ErrorKind::NonConvergence, "energy tie iteration never reached the nontrivial branch");
    return out;
}

namespace detail {

inline void check_ordered(const Profile1D& phi, const Profile1D& phibar)
{
    for (std::size_t j = 1; j + 1 < phi.values.size(); ++j)
        if (!(phibar[j] > phi[j]))
            throw Error(ErrorKind::PairNotOrdered, "phibar does not lie above phi at node " + std::to_string(j));
}

} // namespace detail

/// Nontrivial minimizer approached from below lambda*: the branch is first
/// tied to the threshold, then sampled at lambda_tie - delta 2^-j.
inline MinimizerPair extract_pair(const LambdaStarResult& ls, const PairSettings& ps = {}, const SolverSettings1D& solver = {},
                                  unsigned threads = 1, double margin = 1e-4)
{
    const Mode mode = ls.mode;
    const std::size_t m = ls.m;
    MinimizerPair out;
    out.mode = mode;
    out.phi = trivial(mode, m);
    out.threshold = ls.threshold;

    const GlobalMin1D g = global_min_1d(ProblemSpec{mode, ls.lo}, m, solver, threads);
    std::vector<const Basin*> cands;
    for (const Basin& b : g.basins)
        if (b.nontrivial && b.energy < ls.threshold - 0.5 * margin) cands.push_back(&b);
    if (cands.empty()) throw Error(ErrorKind::NonConvergence, "no nontrivial basin below the threshold at the lower bracket end");
    const double best = cands.front()->energy;
    const Basin* chosen = cands.front();
    for (const Basin* b : cands)
        if (b->energy <= best + margin && b->sup_norm < chosen->sup_norm) chosen = b;
    for (const Basin* b : cands)
        if (b != chosen) out.alternatives.push_back(b->profile);
    out.ambiguous = std::count_if(cands.begin(), cands.end(), [&](const Basin* b) { return b->energy <= best + margin; }) > 1;

    const TieResult tie = tie_energy(mode, chosen->profile, ls.lo, ls.threshold, ls.lo, ls.hi, ps, solver);
    out.lambda_star = tie.lambda;

    const double delta = ps.tol_energy / std::max(tie.slope, 1e-300);
    Profile1D prev = tie.profile;
    std::vector<Profile1D> seq;
    for (int j = 0; j <= 2; ++j) {
        const double lam = tie.lambda - delta * std::ldexp(1.0, -j);
        const SolveResult1D r = solve_el(ProblemSpec{mode, lam}, prev, solver);
        if (!r.converged()) throw Error(ErrorKind::NonConvergence, "approach sequence solve failed at j=" + std::to_string(j));
        seq.push_back(r.profile);
        prev = r.profile;
        out.lambda = lam;
        out.energy = r.energy;
    }
    for (std::size_t j = 1; j < seq.size(); ++j) out.cauchy.push_back(max_abs_diff(seq[j], seq[j - 1]));
    out.phibar = seq.back();
    detail::check_ordered(out.phi, out.phibar);
    return out;
}

/// Recomputes a pair on another grid with the energies tied exactly there.
inline MinimizerPair tie_pair_on_grid(const MinimizerPair& pair, std::size_t m, const PairSettings& ps = {},
                                      const SolverSettings1D& solver = {})
{
    MinimizerPair out;
    out.mode = pair.mode;
    out.phi = trivial(pair.mode, m);
    out.threshold = discrete_threshold(pair.mode, m);
    const TieResult tie = tie_energy(pair.mode, resample(pair.phibar, m), pair.lambda_star, out.threshold, 0.0,
                                     std::numeric_limits<double>::infinity(), ps, solver);
    out.lambda_star = tie.lambda;
    out.lambda = tie.lambda;
    out.phibar = tie.profile;
    out.energy = energy_1d(out.phibar, ProblemSpec{pair.mode, tie.lambda});
    detail::check_ordered(out.phi, out.phibar);
    return out;
}

/// Discrete first integral 1/2 p^2 + F(psi) with p the central slope and the
/// h^2 correction of the three-point scheme; interior nodes only.
inline std::vector<double> first_integral(const Profile1D& psi, const ProblemSpec& spec)
{
    const std::size_t m = psi.cells();
    const double h = psi.spacing();
    std::vector<double> out;
    out.reserve(m - 1);
    for (std::size_t j = 1; j < m; ++j) {
        const double p = (psi[j + 1] - psi[j - 1]) / (2.0 * h);
        const PotentialJet q = potential(psi[j], spec);
        out.push_back(0.5 * p * p + q.F + h * h * (q.df * p * p / 12.0 - q.f * q.f / 24.0));
    }
    return out;
}

inline double spread(const std::vector<double>& v)
{
    if (v.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

/// Second-order one-sided slopes at t = 0 and t = 1.
inline std::pair<double, double> end_slopes(const Profile1D& psi)
{
    const std::size_t m = psi.cells();
    const double h = psi.spacing();
    const double d0 = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h);
    const double d1 = (3.0 * psi[m] - 4.0 * psi[m - 1] + psi[m - 2]) / (2.0 * h);
    return {d0, d1};
}

} // namespace ltc
