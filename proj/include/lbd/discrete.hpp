#pragma once

// Discrete multiple-stopping ladder: the control takes values u_n = n/N and
// each exercise right moves it one level up. Boundary beliefs b_n and
// coefficients A_n are found by backward recursion, then V_n is assembled
// piecewise:
//   V_n(pi) = A_n G_n(pi)             for pi < b_n
//           = pi - k + V_{n+1}(pi)    for pi >= b_n,   V_{N+1} = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "lbd/error.hpp"
#include "lbd/model.hpp"

namespace lbd {

struct DiscreteLadder {
    std::size_t N = 0;
    double r = 0.1;
    double k = 0.5;
    std::vector<double> u;
    std::vector<double> gamma;
    std::vector<double> c;
    std::vector<double> b;
    std::vector<double> A;
    std::vector<double> residual;     ///< f_n(b_n); zero at n = N
    std::vector<bool> step_monotone;  ///< b_n <= b_{n+1}, n < N
    bool monotone = true;

    std::size_t levels() const { return N + 1; }

    /// rho_n^2 = 2r / (gamma_n (gamma_n - 1)).
    double rho2(std::size_t n) const { return 2.0 * r / (gamma[n] * (gamma[n] - 1.0)); }
};

namespace detail {

template <std::floating_point Real>
Real ladder_G(Real g, Real pi) {
    if (pi <= Real(0)) return Real(0);
    return fundamental_G<Real>(g, pi);
}

template <std::floating_point Real>
Real ladder_G1(Real g, Real pi) {
    if (pi <= Real(0)) return Real(0);
    return fundamental_G<Real>(g, pi) * (g - pi) / (pi * (Real(1) - pi));
}

inline void check_belief(double pi, const char* what) {
    if (!(pi >= 0.0 && pi < 1.0)) throw DomainError(std::string(what) + ": belief must lie in [0,1)");
}

}  // namespace detail

/// V_n(pi) from the pieces at levels n..N. Level m contributes A_m G_m(pi)
/// and terminates the sum when pi < b_m.
template <std::floating_point Real = double>
Real eval_Vn(const DiscreteLadder& L, std::size_t n, Real pi) {
    detail::check_belief(static_cast<double>(pi), "eval_Vn");
    if (n > L.N + 1) throw DomainError("eval_Vn: level out of range");
    Real sum = 0;
    for (std::size_t m = n; m <= L.N; ++m) {
        if (pi < Real(L.b[m])) return sum + Real(L.A[m]) * detail::ladder_G<Real>(Real(L.gamma[m]), pi);
        sum += pi - Real(L.k);
    }
    return sum;
}

/// dV_n/dpi away from the kinks; at pi = b_m the right derivative is returned.
template <std::floating_point Real = double>
Real eval_Vn_derivative(const DiscreteLadder& L, std::size_t n, Real pi) {
    detail::check_belief(static_cast<double>(pi), "eval_Vn_derivative");
    Real sum = 0;
    for (std::size_t m = n; m <= L.N; ++m) {
        if (pi < Real(L.b[m])) return sum + Real(L.A[m]) * detail::ladder_G1<Real>(Real(L.gamma[m]), pi);
        sum += Real(1);
    }
    return sum;
}

/// f_n(b) = (gamma_n + k - 1) b - gamma_n k + (gamma_n - gamma_{n+1}) V_{n+1}(b).
/// Levels n+1..N of `L` must already be solved.
inline double boundary_equation_fn(const DiscreteLadder& L, std::size_t n, double b) {
    if (n >= L.N) throw DomainError("boundary_equation_fn: need n < N");
    const double gn = L.gamma[n], g1 = L.gamma[n + 1];
    return (gn + L.k - 1.0) * b - gn * L.k + (gn - g1) * eval_Vn<double>(L, n + 1, b);
}

inline constexpr double kBracketEpsilon = 1e-12;
inline constexpr double kRootTolerance = 1e-13;

/// Backward recursion on a raw gamma array gamma_0 > ... > gamma_N > 1.
inline DiscreteLadder solve_ladder(const std::vector<double>& gamma, const ModelParams& params) {
    params.validate();
    if (gamma.empty()) throw PreconditionError("solve_ladder: gamma array is empty");
    for (std::size_t n = 0; n < gamma.size(); ++n) {
        if (!(gamma[n] > 1.0) || !std::isfinite(gamma[n]))
            throw PreconditionError("solve_ladder: gamma_" + std::to_string(n) + " must exceed 1");
        if (n + 1 < gamma.size() && !(gamma[n] > gamma[n + 1]))
            throw PreconditionError("solve_ladder: gamma_n must be strictly decreasing (fails at n = " +
                                    std::to_string(n) + ")");
    }
    DiscreteLadder L;
    L.N = gamma.size() - 1;
    L.r = params.r;
    L.k = params.k;
    L.gamma = gamma;
    const std::size_t levels = L.N + 1;
    L.u.resize(levels);
    L.c.resize(levels);
    L.b.assign(levels, 0.0);
    L.A.assign(levels, 0.0);
    L.residual.assign(levels, 0.0);
    L.step_monotone.assign(L.N, true);
    for (std::size_t n = 0; n < levels; ++n) {
        L.u[n] = L.N == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(L.N);
        L.c[n] = stopping_threshold_c(gamma[n], params.k);
    }

    const std::size_t N = L.N;
    L.b[N] = L.c[N];
    L.A[N] = (L.b[N] - params.k) / fundamental_G(gamma[N], L.b[N]);

    for (std::size_t n = N; n-- > 0;) {
        double lo = kBracketEpsilon, hi = L.c[n] - kBracketEpsilon;
        double flo = boundary_equation_fn(L, n, lo), fhi = boundary_equation_fn(L, n, hi);
        if (!(flo < 0.0 && fhi > 0.0))
            throw BracketError("solve_ladder: no sign change of f_" + std::to_string(n) + " on (0, c_n)");
        double root = lo, froot = flo;
        for (int it = 0; it < 400; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double fm = boundary_equation_fn(L, n, mid);
            if (fm == 0.0) {
                lo = hi = mid;
                flo = fhi = 0.0;
                break;
            }
            if (fm < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
                fhi = fm;
            }
        }
        if (std::abs(flo) <= std::abs(fhi)) {
            root = lo;
            froot = flo;
        } else {
            root = hi;
            froot = fhi;
        }
        if (!(std::abs(froot) <= kRootTolerance))
            throw BracketError("solve_ladder: bisection residual for f_" + std::to_string(n) + " above tolerance");
        L.b[n] = root;
        L.residual[n] = froot;
        L.A[n] = (root - params.k + eval_Vn<double>(L, n + 1, root)) / fundamental_G(gamma[n], root);
        L.step_monotone[n] = L.b[n] <= L.b[n + 1];
        L.monotone = L.monotone && L.step_monotone[n];
    }
    return L;
}

/// gamma sampled from a rate family at u_n = n/N (u_0 = 0 when N = 0).
inline std::vector<double> sample_gamma(const RateSpec& spec, const ModelParams& params, std::size_t N) {
    std::vector<double> g(N + 1);
    for (std::size_t n = 0; n <= N; ++n)
        g[n] = gamma(spec, params, N == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(N));
    return g;
}

inline DiscreteLadder solve_ladder(const RateSpec& spec, const ModelParams& params, std::size_t N) {
    params.validate();
    return solve_ladder(sample_gamma(spec, params, N), params);
}

// ---------------------------------------------------------------------------
// Monotonicity
// ---------------------------------------------------------------------------

struct DiscreteMonotoneLevel {
    std::size_t n = 0;
    double condition = 0.0;   ///< 2 d_n d_{n+1} - (second difference) gamma_{n+1}; need <= 0
    bool condition_holds = false;
    double H_at_c = 0.0;      ///< H_n(c_{n+1}) = 2 (c_{n+1} - k)(gamma_n - gamma_{n+1})
    double H_at_zero = 0.0;
    double H_at_b = 0.0;      ///< H_n(b_{n+1}) = f_n(b_{n+1})
    bool observed_monotone = false;
};

struct DiscreteMonotoneReport {
    std::vector<DiscreteMonotoneLevel> levels;
    bool all_conditions_hold = true;
    bool observed_monotone = true;
    /// Condition holds everywhere, so the monotone boundary is certified.
    bool certified() const { return all_conditions_hold; }
};

/// Affine certificate H_n(b) (equals f_n(b) at b = b_{n+1}).
inline double discrete_H(const DiscreteLadder& L, std::size_t n, double b) {
    const double g0 = L.gamma[n], g1 = L.gamma[n + 1], g2 = L.gamma[n + 2];
    return 2.0 * (b - L.k) * (g0 - g1) + (g1 * L.k - (g1 + L.k - 1.0) * b) * (g0 - 2.0 * g1 + g2) / (g1 - g2);
}

inline DiscreteMonotoneReport check_discrete_monotone(const DiscreteLadder& L) {
    DiscreteMonotoneReport rep;
    for (std::size_t n = 0; n < L.N; ++n) rep.observed_monotone = rep.observed_monotone && L.b[n] <= L.b[n + 1];
    for (std::size_t n = 0; n + 2 <= L.N; ++n) {
        const double g0 = L.gamma[n], g1 = L.gamma[n + 1], g2 = L.gamma[n + 2];
        DiscreteMonotoneLevel lv;
        lv.n = n;
        const double a = 2.0 * (g0 - g1) * (g1 - g2), s = (g0 - 2.0 * g1 + g2) * g1;
        lv.condition = a - s;
        // Exact equality is typical (hyperbolic gamma), so allow rounding.
        lv.condition_holds = lv.condition <= 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(a) + std::abs(s));
        lv.H_at_c = discrete_H(L, n, L.c[n + 1]);
        lv.H_at_zero = discrete_H(L, n, 0.0);
        lv.H_at_b = discrete_H(L, n, L.b[n + 1]);
        lv.observed_monotone = L.b[n] <= L.b[n + 1];
        rep.all_conditions_hold = rep.all_conditions_hold && lv.condition_holds;
        rep.levels.push_back(lv);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

struct DiscreteVerificationOptions {
    std::size_t grid_points = 999;  ///< pi_j = j / (grid_points + 1)
    double obstacle_tolerance = 1e-10;
    double generator_tolerance = 1e-8;
    double smooth_fit_tolerance = 1e-4;
    double kink_exclusion = 1e-4;
    double fd_step = 1e-5;
    double continuity_tolerance = 1e-12;
};

struct DiscreteVerification {
    double max_obstacle_violation = 0.0;   ///< max of V_{n+1} + pi - k - V_n
    double max_generator = -std::numeric_limits<double>::infinity();
    double max_smooth_fit = 0.0;
    double max_continuity_gap = 0.0;
    std::size_t worst_obstacle_level = 0;
    std::size_t worst_generator_level = 0;
    bool obstacle_ok = false;
    bool generator_ok = false;
    bool smooth_fit_ok = false;
    bool continuity_ok = false;
    bool hypotheses_verified = false;  ///< b_n <= b_{n+1} at every level
    std::string note;
    bool ok() const { return obstacle_ok && generator_ok && smooth_fit_ok && continuity_ok; }
};

inline DiscreteVerification discrete_verification_suite(const DiscreteLadder& L,
                                                        const DiscreteVerificationOptions& opt = {}) {
    using W = long double;
    DiscreteVerification rep;
    rep.hypotheses_verified = L.monotone;
    const std::size_t M = opt.grid_points;
    const W h = opt.fd_step;

    for (std::size_t n = 0; n <= L.N; ++n) {
        const W rho2 = L.rho2(n);
        for (std::size_t j = 1; j <= M; ++j) {
            const double pi = static_cast<double>(j) / static_cast<double>(M + 1);
            const double vn = eval_Vn<double>(L, n, pi);
            const double next = (n < L.N ? eval_Vn<double>(L, n + 1, pi) : 0.0) + pi - L.k;
            if (next - vn > rep.max_obstacle_violation) {
                rep.max_obstacle_violation = next - vn;
                rep.worst_obstacle_level = n;
            }
            bool near_kink = false;
            for (std::size_t m = n; m <= L.N; ++m) near_kink = near_kink || std::abs(pi - L.b[m]) < opt.kink_exclusion;
            if (near_kink || pi - static_cast<double>(h) <= 0.0 || pi + static_cast<double>(h) >= 1.0) continue;
            const W p = pi;
            const W v0 = eval_Vn<W>(L, n, p), vp = eval_Vn<W>(L, n, p + h), vm = eval_Vn<W>(L, n, p - h);
            const W d2 = (vp - 2 * v0 + vm) / (h * h);
            const W gen = rho2 / 2 * p * p * (1 - p) * (1 - p) * d2 - W(L.r) * v0;
            if (static_cast<double>(gen) > rep.max_generator) {
                rep.max_generator = static_cast<double>(gen);
                rep.worst_generator_level = n;
            }
        }
        // One-sided second-order slopes at b_n.
        const W b = L.b[n];
        if (b - 2 * h > 0 && b + 2 * h < 1) {
            const W v_left = W(L.A[n]) * detail::ladder_G<W>(W(L.gamma[n]), b);
            const W left = (3 * v_left - 4 * eval_Vn<W>(L, n, b - h) + eval_Vn<W>(L, n, b - 2 * h)) / (2 * h);
            const W right = (-3 * eval_Vn<W>(L, n, b) + 4 * eval_Vn<W>(L, n, b + h) - eval_Vn<W>(L, n, b + 2 * h)) / (2 * h);
            rep.max_smooth_fit = std::max(rep.max_smooth_fit, static_cast<double>(std::abs(left - right)));
        }
        for (std::size_t m = n; m <= L.N; ++m) {
            const double bm = L.b[m];
            if (!(bm > 0.0 && bm < 1.0)) continue;
            const double gap = std::abs(eval_Vn<double>(L, n, bm) - eval_Vn<double>(L, n, std::nextafter(bm, 0.0)));
            rep.max_continuity_gap = std::max(rep.max_continuity_gap, gap);
        }
    }
    rep.obstacle_ok = rep.max_obstacle_violation <= opt.obstacle_tolerance;
    rep.generator_ok = rep.max_generator <= opt.generator_tolerance;
    rep.smooth_fit_ok = rep.max_smooth_fit <= opt.smooth_fit_tolerance;
    rep.continuity_ok = rep.max_continuity_gap <= opt.continuity_tolerance;
    if (!rep.hypotheses_verified)
        rep.note = "boundary not monotone in n: smooth fit and optimality not guaranteed";
    else if (!check_discrete_monotone(L).all_conditions_hold)
        rep.note = "monotonicity condition fails at some level: hypothesis unverified";
    return rep;
}

}  // namespace lbd
