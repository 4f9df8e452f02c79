#pragma once

// Optimal reflecting boundary b(u): the terminal value problem
//   b'(u) = F(u, b(u)),  b(1) = c(1),
// integrated backward from u = 1 with a fixed-step classical RK4 scheme.
// Between grid nodes the curve is evaluated by cubic Hermite interpolation
// through (b_i, F(u_i, b_i)); its inverse h is extended by 0 below b(0)
// and by 1 above b(1).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lbd/error.hpp"
#include "lbd/model.hpp"

namespace lbd {

/// Slope F(u, b) of the boundary ODE for a given gamma jet.
///   F = [2(b-k) g'^2 + (g k - (g+k-1) b) g''] / [-g (g k - (g+k-1) b) - (g-1)(1-k) b] * b(1-b)/g'
/// The factor g k - (g+k-1) b is evaluated as -(g+k-1)(b - c), which is
/// exactly zero at b = c.
template <std::floating_point Real>
Real boundary_slope(const GammaJet<Real>& j, Real k, Real b) {
    const Real g = j.value;
    const Real gk1 = g + k - Real(1);
    const Real c = k * g / gk1;
    const Real num = Real(2) * (b - k) * j.d1 * j.d1 - gk1 * (b - c) * j.d2;
    const Real den = g * gk1 * (b - c) - (g - Real(1)) * (Real(1) - k) * b;
    return num / den * b * (Real(1) - b) / j.d1;
}

inline constexpr double kGuardTolerance = 1e-9;

/// F(u, b), guarded to the strip 0 < b < c(u) (up to kGuardTolerance above c).
inline double rhs_F(const RateSpec& spec, const ModelParams& params, double u, double b) {
    const auto j = spec.gamma_jet(params.r, u);
    const double c = stopping_threshold_c(j.value, params.k);
    if (!(b > 0.0) || !(b < c + kGuardTolerance))
        throw GuardError("rhs_F: b=" + std::to_string(b) + " outside (0, c(u)] at u=" + std::to_string(u));
    if (j.d1 == 0.0) throw GuardError("rhs_F: gamma'(u) = 0, slope undefined");
    return boundary_slope<double>(j, params.k, b);
}

/// One classical RK4 step of b' = F(u, b) from (u_hi, b_hi) to u_hi - step.
template <std::floating_point Real>
Real rk4_backward_step(const RateSpec& spec, const ModelParams& params, Real u_hi, Real b_hi, Real step) {
    const Real k = Real(params.k);
    auto f = [&](Real u, Real b) {
        return boundary_slope<Real>(spec.gamma_jet<Real>(params.r, std::clamp(u, Real(0), Real(1))), k, b);
    };
    const Real s = -step;
    const Real k1 = f(u_hi, b_hi);
    const Real k2 = f(u_hi + s / 2, b_hi + s / 2 * k1);
    const Real k3 = f(u_hi + s / 2, b_hi + s / 2 * k2);
    const Real k4 = f(u_hi + s, b_hi + s * k3);
    return b_hi + s / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Solved boundary on an ascending u-grid covering [0,1].
struct BoundaryCurve {
    std::vector<double> u;
    std::vector<double> b;
    std::vector<double> c;      ///< c(u_i)
    std::vector<double> slope;  ///< F(u_i, b_i), used for Hermite interpolation
    bool monotone = false;      ///< b_{i+1} > b_i for every i
    bool above_k = false;       ///< b_i >= k for every i

    std::size_t size() const noexcept { return u.size(); }
    double front() const { return b.front(); }
    double back() const { return b.back(); }

    /// Index i of the cell [u_i, u_{i+1}] containing x.
    std::size_t cell(double x) const {
        auto it = std::upper_bound(u.begin(), u.end(), x);
        std::size_t i = (it == u.begin()) ? 0 : static_cast<std::size_t>(it - u.begin()) - 1;
        return std::min(i, u.size() - 2);
    }

    /// b(x) by cubic Hermite interpolation.
    template <std::floating_point Real = double>
    Real value(Real x) const {
        detail::check_unit_interval(x, "BoundaryCurve::value");
        const std::size_t i = cell(static_cast<double>(x));
        return hermite<Real>(i, x).first;
    }

    /// b'(x) of the Hermite interpolant.
    template <std::floating_point Real = double>
    Real derivative(Real x) const {
        detail::check_unit_interval(x, "BoundaryCurve::derivative");
        const std::size_t i = cell(static_cast<double>(x));
        return hermite<Real>(i, x).second;
    }

    /// (value, derivative) of the Hermite cubic on cell i at x.
    template <std::floating_point Real>
    std::pair<Real, Real> hermite(std::size_t i, Real x) const {
        const Real h = Real(u[i + 1]) - Real(u[i]);
        const Real t = (x - Real(u[i])) / h;
        const Real t2 = t * t, t3 = t2 * t;
        const Real b0 = Real(b[i]), b1 = Real(b[i + 1]);
        const Real m0 = Real(slope[i]) * h, m1 = Real(slope[i + 1]) * h;
        const Real val = (2 * t3 - 3 * t2 + 1) * b0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * b1 +
                         (t3 - t2) * m1;
        const Real der = ((6 * t2 - 6 * t) * b0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * b1 +
                          (3 * t2 - 2 * t) * m1) /
                         h;
        return {val, der};
    }
};

struct SolveOptions {
    /// Steps landing above c(u) by less than this are projected back inside.
    double projection_tolerance = kGuardTolerance;
};

namespace detail {

inline void finalize_flags(BoundaryCurve& curve, double k) {
    curve.monotone = true;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i)
        if (!(curve.b[i + 1] > curve.b[i])) curve.monotone = false;
    curve.above_k = std::all_of(curve.b.begin(), curve.b.end(), [k](double v) { return v >= k; });
}

}  // namespace detail

/// Integrate the boundary ODE backward from b(1) = c(1) on a uniform grid
/// of `grid_size` points.
inline BoundaryCurve solve_boundary(const RateSpec& spec, const ModelParams& params, std::size_t grid_size,
                                    const SolveOptions& opts = {}) {
    params.validate();
    if (grid_size < 2) throw DomainError("solve_boundary: grid_size must be at least 2");
    const auto assumptions = check_assumptions(spec, params);
    if (!assumptions.gamma_decreasing)
        throw PreconditionError("solve_boundary: gamma must be strictly decreasing (rho increasing) on [0,1]");
    if (!assumptions.gamma_above_one) throw PreconditionError("solve_boundary: gamma must exceed 1 on [0,1]");

    BoundaryCurve curve;
    const std::size_t n = grid_size;
    curve.u.resize(n);
    curve.b.resize(n);
    curve.c.resize(n);
    curve.slope.resize(n);
    for (std::size_t i = 0; i < n; ++i) curve.u[i] = (i + 1 == n) ? 1.0 : static_cast<double>(i) / (n - 1);
    for (std::size_t i = 0; i < n; ++i) curve.c[i] = stopping_threshold_c(spec, params, curve.u[i]);

    curve.b[n - 1] = curve.c[n - 1];
    for (std::size_t i = n - 1; i > 0; --i) {
        const double step = curve.u[i] - curve.u[i - 1];
        double next = rk4_backward_step<double>(spec, params, curve.u[i], curve.b[i], step);
        const double ci = curve.c[i - 1];
        if (!std::isfinite(next) || next <= 0.0 || next >= ci + opts.projection_tolerance) {
            throw GuardError("solve_boundary: left the strip 0 < b < c(u) at u=" + std::to_string(curve.u[i - 1]) +
                             " (b=" + std::to_string(next) + ", c=" + std::to_string(ci) + ")");
        }
        if (next >= ci) next = std::nextafter(ci, 0.0);
        curve.b[i - 1] = next;
    }
    for (std::size_t i = 0; i < n; ++i) curve.slope[i] = rhs_F(spec, params, curve.u[i], curve.b[i]);
    detail::finalize_flags(curve, params.k);
    return curve;
}

/// Rebuild a curve from stored (u, b) pairs (e.g. a CSV), recomputing c and
/// the node slopes. No ODE consistency is assumed; see validate_curve.
inline BoundaryCurve curve_from_samples(const RateSpec& spec, const ModelParams& params, std::vector<double> u,
                                        std::vector<double> b) {
    params.validate();
    if (u.size() != b.size() || u.size() < 2) throw ConfigError("boundary samples: need at least two (u,b) pairs");
    for (std::size_t i = 0; i + 1 < u.size(); ++i)
        if (!(u[i + 1] > u[i])) throw ConfigError("boundary samples: u must be strictly ascending");
    if (u.front() != 0.0 || u.back() != 1.0) throw ConfigError("boundary samples: u grid must span [0,1]");
    BoundaryCurve curve;
    curve.u = std::move(u);
    curve.b = std::move(b);
    curve.c.resize(curve.size());
    curve.slope.resize(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        curve.c[i] = stopping_threshold_c(spec, params, curve.u[i]);
        curve.slope[i] = rhs_F(spec, params, curve.u[i], curve.b[i]);
    }
    detail::finalize_flags(curve, params.k);
    return curve;
}

/// Structural checks of a curve against the terminal condition, the strip
/// 0 < b < c and the ODE itself.
struct CurveCheck {
    double terminal_error = 0.0;     ///< |b(1) - c(1)|
    double min_margin = 0.0;         ///< min over u_i < 1 of min(b_i, c_i - b_i)
    double max_ode_residual = 0.0;   ///< max relative mismatch of centred slope vs F
    double ode_tolerance = 0.0;
    bool terminal_ok = false;
    bool bounds_ok = false;
    bool ode_ok = false;
    bool ok() const { return terminal_ok && bounds_ok && ode_ok; }
};

inline CurveCheck validate_curve(const BoundaryCurve& curve, double margin = 1e-10) {
    CurveCheck chk;
    const std::size_t n = curve.size();
    chk.terminal_error = std::abs(curve.b.back() - curve.c.back());
    chk.terminal_ok = chk.terminal_error <= 1e-10;
    chk.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < n; ++i)
        chk.min_margin = std::min({chk.min_margin, curve.b[i], curve.c[i] - curve.b[i]});
    chk.bounds_ok = chk.min_margin > margin;
    double hmax = 0.0, hmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        hmax = std::max(hmax, curve.u[i + 1] - curve.u[i]);
        hmin = std::min(hmin, curve.u[i + 1] - curve.u[i]);
    }
    chk.ode_tolerance = std::max(1e-6, 10.0 * hmax * hmax);
    // Fourth-order centred slopes on uniform grids (off-centre at the two
    // nodes next to the ends), three-point otherwise.
    const bool uniform = n >= 5 && hmax - hmin <= 1e-9 * hmax;
    const auto& b = curve.b;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double fd;
        if (uniform && i >= 2 && i + 2 < n)
            fd = (-b[i + 2] + 8.0 * b[i + 1] - 8.0 * b[i - 1] + b[i - 2]) / (12.0 * hmax);
        else if (uniform && i == 1)
            fd = (-3.0 * b[0] - 10.0 * b[1] + 18.0 * b[2] - 6.0 * b[3] + b[4]) / (12.0 * hmax);
        else if (uniform && i + 2 == n)
            fd = (3.0 * b[i + 1] + 10.0 * b[i] - 18.0 * b[i - 1] + 6.0 * b[i - 2] - b[i - 3]) / (12.0 * hmax);
        else
            fd = (b[i + 1] - b[i - 1]) / (curve.u[i + 1] - curve.u[i - 1]);
        const double rel = std::abs(fd - curve.slope[i]) / std::max(1.0, std::abs(curve.slope[i]));
        chk.max_ode_residual = std::max(chk.max_ode_residual, rel);
    }
    chk.ode_ok = chk.max_ode_residual <= chk.ode_tolerance;
    return chk;
}

/// Points where b crosses `level` (sign change of b - level between nodes),
/// refined by bisection on the Hermite interpolant.
inline std::vector<double> level_crossings(const BoundaryCurve& curve, double level) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        const double f0 = curve.b[i] - level, f1 = curve.b[i + 1] - level;
        if (f0 == 0.0) {
            out.push_back(curve.u[i]);
            continue;
        }
        if ((f0 < 0.0) == (f1 < 0.0) || f1 == 0.0) continue;
        double lo = curve.u[i], hi = curve.u[i + 1];
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double fm = curve.hermite<double>(i, mid).first - level;
            if ((fm < 0.0) == (f0 < 0.0)) lo = mid;
            else hi = mid;
        }
        out.push_back(0.5 * (lo + hi));
    }
    if (curve.b.back() == level) out.push_back(curve.u.back());
    return out;
}

/// Inverse h of a strictly increasing boundary, extended by h = 0 below b(0)
/// and h = 1 above b(1).
class BoundaryInverse {
public:
    explicit BoundaryInverse(BoundaryCurve curve) : curve_(std::move(curve)) {
        if (!curve_.monotone) throw PreconditionError("invert_boundary: boundary is not certified monotone");
    }

    template <std::floating_point Real = double>
    Real operator()(Real pi) const {
        const auto& c = curve_;
        if (pi <= Real(c.b.front())) return Real(0);
        if (pi >= Real(c.b.back())) return Real(1);
        auto it = std::upper_bound(c.b.begin(), c.b.end(), static_cast<double>(pi));
        std::size_t i = static_cast<std::size_t>(it - c.b.begin()) - 1;
        // Guard against pi rounding onto a different cell in double.
        while (i > 0 && Real(c.b[i]) > pi) --i;
        while (i + 2 < c.size() && Real(c.b[i + 1]) <= pi) ++i;
        const Real b0 = Real(c.b[i]), b1 = Real(c.b[i + 1]);
        const Real u0 = Real(c.u[i]), u1 = Real(c.u[i + 1]);
        if (pi == b0) return u0;
        // Safeguarded Newton on the Hermite cubic.
        Real lo = u0, hi = u1;
        Real x = u0 + (u1 - u0) * (pi - b0) / (b1 - b0);
        for (int it = 0; it < 100; ++it) {
            const auto [val, der] = c.hermite<Real>(i, x);
            const Real f = val - pi;
            if (f == Real(0)) return x;
            if (f < Real(0)) lo = x;
            else hi = x;
            Real nx = (der > Real(0)) ? x - f / der : Real(0.5) * (lo + hi);
            if (!(nx > lo && nx < hi)) nx = Real(0.5) * (lo + hi);
            if (std::abs(nx - x) <= std::numeric_limits<Real>::epsilon() * Real(4) * std::max(Real(1e-3), x)) {
                return nx;
            }
            x = nx;
            if (hi - lo <= std::numeric_limits<Real>::epsilon() * Real(2)) break;
        }
        return x;
    }

    const BoundaryCurve& curve() const noexcept { return curve_; }

private:
    BoundaryCurve curve_;
};

inline BoundaryInverse invert_boundary(const BoundaryCurve& curve) { return BoundaryInverse(curve); }

}  // namespace lbd
