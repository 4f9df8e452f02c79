#pragma once

// Candidate value function built from a monotone boundary:
//   V(u, pi) = A(u) G(u, pi)                                  pi <= b(u)
//   V(u, pi) = A(h(pi)) G(h(pi), pi) + (pi - k)(h(pi) - u)    pi >  b(u)
// with A(u) = ((gamma + k - 1) b - gamma k) / (gamma' G(u, b)), plus the
// finite-difference diagnostics that check its defining inequalities.
//
// Diagnostics evaluate the surface in long double so that second
// differences with step 1e-5 stay well below the 1e-8 tolerances.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lbd/boundary.hpp"
#include "lbd/error.hpp"
#include "lbd/model.hpp"

namespace lbd {

using Wide = long double;

class ValueSurface {
public:
    ValueSurface(RateSpec spec, ModelParams params, BoundaryCurve curve)
        : spec_(std::move(spec)), params_(params), inverse_(std::move(curve)) {
        params_.validate();
        const auto& c = inverse_.curve();
        if (c.u.front() != 0.0 || c.u.back() != 1.0) throw DomainError("ValueSurface: curve must span [0,1]");
    }

    const RateSpec& spec() const noexcept { return spec_; }
    const ModelParams& params() const noexcept { return params_; }
    const BoundaryCurve& curve() const noexcept { return inverse_.curve(); }
    const BoundaryInverse& inverse() const noexcept { return inverse_; }

    template <std::floating_point Real = double>
    Real boundary(Real u) const {
        return curve().value<Real>(u);
    }

    template <std::floating_point Real = double>
    Real h(Real pi) const {
        return inverse_.operator()<Real>(pi);
    }

    template <std::floating_point Real = double>
    Real coefficient_A(Real u) const {
        const auto j = spec_.gamma_jet<Real>(params_.r, u);
        const Real k = Real(params_.k);
        const Real b = boundary<Real>(u);
        const Real gk1 = j.value + k - Real(1);
        const Real c = k * j.value / gk1;
        return gk1 * (b - c) / (j.d1 * fundamental_G<Real>(j.value, b));
    }

    /// A(u) G(u, pi): the no-action branch, also evaluated as its analytic
    /// continuation above the boundary.
    template <std::floating_point Real = double>
    Real lower(Real u, Real pi) const {
        const Real g = spec_.gamma_jet<Real>(params_.r, u).value;
        return coefficient_A<Real>(u) * fundamental_G<Real>(g, pi);
    }

    /// A(h) G(h, pi) + (pi - k)(h - u) with h = h(pi): the investment branch.
    template <std::floating_point Real = double>
    Real upper(Real u, Real pi) const {
        const Real u0 = std::max(u, h<Real>(pi));
        return lower<Real>(u0, pi) + (pi - Real(params_.k)) * (u0 - u);
    }

    template <std::floating_point Real = double>
    Real value(Real u, Real pi) const {
        detail::check_unit_interval(u, "value_hat");
        if (!(pi > Real(0) && pi < Real(1))) throw DomainError("value_hat: belief must lie in (0,1)");
        if (pi <= boundary<Real>(u)) return lower<Real>(u, pi);
        return upper<Real>(u, pi);
    }

private:
    RateSpec spec_;
    ModelParams params_;
    BoundaryInverse inverse_;
};

inline double coefficient_A(const ValueSurface& s, double u) { return s.coefficient_A<double>(u); }

inline double value_hat(const ValueSurface& s, double u, double pi) { return s.value<double>(u, pi); }

// ---------------------------------------------------------------------------
// Finite-difference helpers
// ---------------------------------------------------------------------------

inline constexpr double kFirstDerivativeStep = 1e-5;
inline constexpr double kMixedDerivativeStep = 1e-4;
inline constexpr double kSecondDerivativeStep = 1e-5;
inline constexpr double kBoundaryExclusion = 1e-6;

enum class Stencil { Central, Forward, Backward };

namespace detail {

/// d/dx of f at x by a second-order stencil that stays inside [lo, hi],
/// preferring `preferred`.
template <class Fn>
Wide derivative(Fn&& f, Wide x, Wide step, Stencil preferred, Wide lo = 0, Wide hi = 1) {
    const bool can_central = x - step >= lo && x + step <= hi;
    const bool can_forward = x + 2 * step <= hi;
    const bool can_backward = x - 2 * step >= lo;
    Stencil s = preferred;
    if (s == Stencil::Central && !can_central) s = can_forward ? Stencil::Forward : Stencil::Backward;
    if (s == Stencil::Forward && !can_forward) s = can_central ? Stencil::Central : Stencil::Backward;
    if (s == Stencil::Backward && !can_backward) s = can_central ? Stencil::Central : Stencil::Forward;
    switch (s) {
        case Stencil::Central: return (f(x + step) - f(x - step)) / (2 * step);
        case Stencil::Forward: return (-3 * f(x) + 4 * f(x + step) - f(x + 2 * step)) / (2 * step);
        case Stencil::Backward: return (3 * f(x) - 4 * f(x - step) + f(x - 2 * step)) / (2 * step);
    }
    return 0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// (rho^2/2) pi^2 (1-pi)^2 V_pipi - r V with V_pipi by central differences.
/// Refuses points within kBoundaryExclusion of b(u).
inline double pde_residual(const ValueSurface& s, double u, double pi) {
    const Wide uw = u, pw = pi;
    const Wide b = s.boundary<Wide>(uw);
    if (std::abs(pw - b) < Wide(kBoundaryExclusion))
        throw DomainError("pde_residual: point lies inside the exclusion band around b(u)");
    const Wide d = kSecondDerivativeStep;
    if (!(pw - d > 0 && pw + d < 1)) throw DomainError("pde_residual: stencil leaves (0,1)");
    const Wide v0 = s.value<Wide>(uw, pw);
    const Wide vpp = (s.value<Wide>(uw, pw + d) - 2 * v0 + s.value<Wide>(uw, pw - d)) / (d * d);
    const Wide rho2 = s.spec().rho2<Wide>(s.params().r, uw);
    const Wide q = pw * (1 - pw);
    return static_cast<double>(rho2 / 2 * q * q * vpp - Wide(s.params().r) * v0);
}

struct SmoothFitResiduals {
    double value_matching = 0.0;  ///< |V_u(u, b-) - (k - b)|
    double mixed = 0.0;           ///< |V_upi(u, b-) + 1|
};

/// Smooth-fit conditions at (u, b(u)) from the no-action branch.
inline SmoothFitResiduals smooth_fit_residuals(const ValueSurface& s, double u) {
    detail::check_unit_interval(u, "smooth_fit_residuals");
    const Wide uw = u;
    const Wide b = s.boundary<Wide>(uw);
    const Wide k = s.params().k;
    auto vu = [&](Wide pi, Wide step) {
        return detail::derivative([&](Wide x) { return s.lower<Wide>(x, pi); }, uw, step, Stencil::Central);
    };
    SmoothFitResiduals r;
    r.value_matching = static_cast<double>(std::abs(vu(b, kFirstDerivativeStep) - (k - b)));
    const Wide dm = kMixedDerivativeStep;
    const Wide mixed = (vu(b + dm, dm) - vu(b - dm, dm)) / (2 * dm);
    r.mixed = static_cast<double>(std::abs(mixed + 1));
    return r;
}

/// |V_pi(u, b-) - V_pi(u, b+)|: one-sided derivatives in pi from each branch.
inline double pi_derivative_jump(const ValueSurface& s, double u) {
    const Wide uw = u;
    const Wide b = s.boundary<Wide>(uw);
    const Wide d = kFirstDerivativeStep;
    const Wide below =
        detail::derivative([&](Wide p) { return s.lower<Wide>(uw, p); }, b, d, Stencil::Backward, 0, 1);
    const Wide above =
        detail::derivative([&](Wide p) { return s.upper<Wide>(uw, p); }, b, d, Stencil::Forward, 0, 1);
    return static_cast<double>(std::abs(below - above));
}

struct SamplePoint {
    double u = 0.0;
    double pi = 0.5;
};

/// Worst value of an inequality over a sample set (positive = violated).
struct WorstViolation {
    double value = -std::numeric_limits<double>::infinity();
    SamplePoint at{};
    std::size_t evaluated = 0;
};

/// V_u at (u, pi) by a stencil that stays on the same side of the boundary:
/// forward in u below it, backward above it.
inline double value_u(const ValueSurface& s, double u, double pi) {
    const Wide uw = u, pw = pi;
    const bool below = pw <= s.boundary<Wide>(uw);
    return static_cast<double>(detail::derivative([&](Wide x) { return s.value<Wide>(x, pw); }, uw,
                                                  Wide(kFirstDerivativeStep),
                                                  below ? Stencil::Forward : Stencil::Backward));
}

/// max over samples of V_u - (k - pi).
inline WorstViolation gradient_bound_check(const ValueSurface& s, const std::vector<SamplePoint>& samples) {
    WorstViolation w;
    for (const auto& p : samples) {
        const double viol = value_u(s, p.u, p.pi) - (s.params().k - p.pi);
        if (viol > w.value) w = {viol, p, w.evaluated};
        ++w.evaluated;
    }
    return w;
}

/// max over samples of (1 - u) v(pi; u) - V(u, pi).
inline WorstViolation learning_premium_check(const ValueSurface& s, const std::vector<SamplePoint>& samples) {
    WorstViolation w;
    for (const auto& p : samples) {
        const double no_learning = (1.0 - p.u) * stopping_value_v(s.spec(), s.params(), p.u, p.pi);
        const double viol = no_learning - value_hat(s, p.u, p.pi);
        if (viol > w.value) w = {viol, p, w.evaluated};
        ++w.evaluated;
    }
    return w;
}

/// Low-discrepancy (Halton, bases 2 and 3) points in [0,1] x [pi_lo, pi_hi].
inline std::vector<SamplePoint> halton_samples(std::size_t n, double pi_lo = 1e-3, double pi_hi = 1.0 - 1e-3,
                                               std::size_t skip = 1) {
    auto radical_inverse = [](std::size_t i, std::size_t base) {
        double f = 1.0, r = 0.0;
        while (i > 0) {
            f /= static_cast<double>(base);
            r += f * static_cast<double>(i % base);
            i /= base;
        }
        return r;
    };
    std::vector<SamplePoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = i + skip;
        out.push_back({radical_inverse(idx, 2), pi_lo + (pi_hi - pi_lo) * radical_inverse(idx, 3)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregate report
// ---------------------------------------------------------------------------

struct ValueDiagnosticsOptions {
    std::size_t boundary_points = 50;
    std::size_t samples = 10000;
    double smooth_fit_tolerance = 1e-4;
    double pde_below_tolerance = 1e-6;  ///< relative: |res| <= tol * max(1, V)
    double pde_above_tolerance = 1e-8;  ///< signed
    double gradient_tolerance = 1e-6;
    double premium_tolerance = 1e-8;
    double c1_tolerance = 1e-5;
};

struct ValueDiagnostics {
    double max_value_matching = 0.0;
    double max_mixed = 0.0;
    double max_pi_jump = 0.0;
    double max_pde_below = 0.0;  ///< max |res| / max(1, V) below the boundary
    double max_pde_above = -std::numeric_limits<double>::infinity();  ///< max signed res above
    std::size_t pde_below_points = 0;
    std::size_t pde_above_points = 0;
    std::size_t pde_excluded = 0;
    WorstViolation gradient;
    WorstViolation premium;
    double A_min = std::numeric_limits<double>::infinity();
    bool smooth_fit_ok = false;
    bool c1_ok = false;
    bool pde_below_ok = false;
    bool pde_above_ok = false;
    bool gradient_ok = false;
    bool premium_ok = false;
    bool A_positive = false;
    bool hypotheses_verified = false;  ///< b >= k everywhere or cond1
    bool ok() const {
        return smooth_fit_ok && c1_ok && pde_below_ok && pde_above_ok && gradient_ok && premium_ok && A_positive;
    }
};

inline ValueDiagnostics run_value_diagnostics(const ValueSurface& s, const ValueDiagnosticsOptions& opt = {}) {
    ValueDiagnostics d;
    const auto& curve = s.curve();
    const auto conds = check_conditions(s.spec(), s.params());
    d.hypotheses_verified = curve.above_k || conds.cond1;

    for (std::size_t j = 0; j < opt.boundary_points; ++j) {
        const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(opt.boundary_points);
        const auto sf = smooth_fit_residuals(s, u);
        d.max_value_matching = std::max(d.max_value_matching, sf.value_matching);
        d.max_mixed = std::max(d.max_mixed, sf.mixed);
        d.max_pi_jump = std::max(d.max_pi_jump, pi_derivative_jump(s, u));
    }
    d.smooth_fit_ok = d.max_value_matching <= opt.smooth_fit_tolerance && d.max_mixed <= opt.smooth_fit_tolerance;
    d.c1_ok = d.max_pi_jump <= opt.c1_tolerance;

    // A(u) > 0 on u < 1; A(1) = 0 since b(1) = c(1).
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) d.A_min = std::min(d.A_min, s.coefficient_A(curve.u[i]));
    d.A_positive = d.A_min > 0.0;

    const auto samples = halton_samples(opt.samples);
    for (const auto& p : samples) {
        const double b = s.boundary(p.u);
        if (std::abs(p.pi - b) < kBoundaryExclusion) {
            ++d.pde_excluded;
            continue;
        }
        const double res = pde_residual(s, p.u, p.pi);
        if (p.pi < b) {
            const double rel = std::abs(res) / std::max(1.0, value_hat(s, p.u, p.pi));
            d.max_pde_below = std::max(d.max_pde_below, rel);
            ++d.pde_below_points;
        } else {
            d.max_pde_above = std::max(d.max_pde_above, res);
            ++d.pde_above_points;
        }
    }
    d.pde_below_ok = d.max_pde_below <= opt.pde_below_tolerance;
    d.pde_above_ok = d.pde_above_points == 0 || d.max_pde_above <= opt.pde_above_tolerance;

    d.gradient = gradient_bound_check(s, samples);
    d.gradient_ok = d.gradient.value <= opt.gradient_tolerance;
    d.premium = learning_premium_check(s, samples);
    d.premium_ok = d.premium.value <= opt.premium_tolerance;
    return d;
}

}  // namespace lbd
