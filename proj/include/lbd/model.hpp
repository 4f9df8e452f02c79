#pragma once

// Model data for irreversible investment with learning-by-doing: discount
// rate and normalized threshold, signal-to-noise families, the exponent
// gamma(u) with its derivatives, the fundamental solution G, the
// constant-rate stopping benchmark, and the sufficient-condition checks.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "lbd/error.hpp"

namespace lbd {

/// Discount rate r and normalized investment threshold k = -mu0/(mu1-mu0).
struct ModelParams {
    double r = 0.1;
    double k = 0.5;

    void validate() const {
        if (!(r > 0.0) || !std::isfinite(r))
            throw DomainError("ModelParams: discount rate r must be positive");
        if (!(k > 0.0 && k < 1.0))
            throw DomainError("ModelParams: threshold k must lie in (0,1)");
    }

    /// Build from the two project values mu0 < 0 < mu1.
    static ModelParams from_project(double r, double mu0, double mu1) {
        if (!(mu0 < 0.0 && mu1 > 0.0))
            throw DomainError("ModelParams: need mu0 < 0 < mu1");
        ModelParams p{r, -mu0 / (mu1 - mu0)};
        p.validate();
        return p;
    }
};

// ---------------------------------------------------------------------------
// Signal-to-noise families
// ---------------------------------------------------------------------------

/// rho^2(u) = C / (1 - D u), C > 0, 0 < D < 1.
struct LinearNoise {
    double C = 0.25;
    double D = 0.9;
};

/// rho^2(u) = C / (1 - D u - E u^2); noise variance quadratic in u.
struct QuadraticNoise {
    double C = 0.25;
    double D = 0.1;
    double E = 0.8;
};

/// gamma(u) = A / (u + beta) given directly; rho^2 = 2r / (gamma^2 - gamma).
struct HyperbolicGamma {
    double A = 1.25;
    double beta = 0.2;
};

/// rho(u) = C sqrt(u + eps). The regularizer keeps rho(0) > 0.
struct SqrtExpansion {
    double C = 1.0;
    double eps = 1e-3;
};

/// rho sampled on a uniform grid over [0,1] (at least 11 nodes).
struct Tabulated {
    std::vector<double> rho;
};

/// gamma and its first three derivatives at one u. `has_d3` is false for
/// tabulated rates, where the third derivative is not computed.
template <std::floating_point Real = double>
struct GammaJet {
    Real value{};
    Real d1{};
    Real d2{};
    Real d3{};
    bool has_d3 = true;
};

/// rho and rho'.
template <std::floating_point Real = double>
struct RhoJet {
    Real value{};
    Real d1{};
};

inline constexpr std::size_t kMinTabulatedNodes = 11;
inline constexpr double kMinTabulatedRho = 1e-6;

namespace detail {

template <std::floating_point Real>
inline void check_unit_interval(Real u, const char* what) {
    if (!(u >= Real(0) && u <= Real(1)))
        throw DomainError(std::string(what) + ": investment level u must lie in [0,1]");
}

/// gamma and derivatives from q = 2r/rho^2 and its derivatives, using
/// gamma^2 - gamma = q differentiated implicitly.
template <std::floating_point Real>
inline GammaJet<Real> jet_from_q(Real q, Real q1, Real q2, Real q3) {
    GammaJet<Real> j;
    j.value = Real(0.5) + std::sqrt(Real(0.25) + q);
    const Real s = Real(2) * j.value - Real(1);
    j.d1 = q1 / s;
    j.d2 = (q2 - Real(2) * j.d1 * j.d1) / s;
    j.d3 = (q3 - Real(6) * j.d1 * j.d2) / s;
    return j;
}

template <std::floating_point Real>
inline Real gamma_from_rho2(Real rho2, Real r) {
    return Real(0.5) + std::sqrt((rho2 + Real(8) * r) / (Real(4) * rho2));
}

}  // namespace detail

/// A signal-to-noise family rho(u) on [0,1] with analytic (or tabulated)
/// derivatives of the exponent gamma(u).
class RateSpec {
public:
    using Family = std::variant<LinearNoise, QuadraticNoise, HyperbolicGamma, SqrtExpansion, Tabulated>;

    RateSpec() : RateSpec(LinearNoise{}) {}

    explicit RateSpec(Family family) : family_(std::move(family)) { validate_family(); }

    const Family& family() const noexcept { return family_; }

    std::string_view family_name() const noexcept {
        return std::visit(
            [](const auto& f) -> std::string_view {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, LinearNoise>) return "linear_noise";
                else if constexpr (std::is_same_v<T, QuadraticNoise>) return "quadratic_noise";
                else if constexpr (std::is_same_v<T, HyperbolicGamma>) return "hyperbolic_gamma";
                else if constexpr (std::is_same_v<T, SqrtExpansion>) return "sqrt_expansion";
                else return "tabulated";
            },
            family_);
    }

    bool has_third_derivative() const noexcept { return !std::holds_alternative<Tabulated>(family_); }

    /// rho^2(u). Depends on r only for HyperbolicGamma.
    template <std::floating_point Real = double>
    Real rho2(double r, Real u) const {
        detail::check_unit_interval(u, "rho2");
        return std::visit([&](const auto& f) { return rho2_impl<Real>(f, Real(r), u); }, family_);
    }

    template <std::floating_point Real = double>
    RhoJet<Real> rho_jet(double r, Real u) const {
        detail::check_unit_interval(u, "rho");
        return std::visit([&](const auto& f) { return rho_jet_impl<Real>(f, Real(r), u); }, family_);
    }

    template <std::floating_point Real = double>
    GammaJet<Real> gamma_jet(double r, Real u) const {
        detail::check_unit_interval(u, "gamma");
        return std::visit([&](const auto& f) { return jet_impl<Real>(f, Real(r), u); }, family_);
    }

private:
    void validate_family() const {
        std::visit(
            [](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, LinearNoise>) {
                    if (!(f.C > 0.0)) throw DomainError("LinearNoise: C must be positive");
                    if (!(f.D > 0.0 && f.D < 1.0)) throw DomainError("LinearNoise: D must lie in (0,1)");
                } else if constexpr (std::is_same_v<T, QuadraticNoise>) {
                    if (!(f.C > 0.0)) throw DomainError("QuadraticNoise: C must be positive");
                    // 1 - D u - E u^2 > 0 on [0,1]: check ends and the interior extremum.
                    auto p = [&](double u) { return 1.0 - f.D * u - f.E * u * u; };
                    double lo = std::min(p(0.0), p(1.0));
                    if (f.E != 0.0) {
                        double uv = -f.D / (2.0 * f.E);
                        if (uv > 0.0 && uv < 1.0) lo = std::min(lo, p(uv));
                    }
                    if (!(lo > 0.0))
                        throw DomainError("QuadraticNoise: 1 - D u - E u^2 must stay positive on [0,1]");
                } else if constexpr (std::is_same_v<T, HyperbolicGamma>) {
                    if (!(f.A > 0.0) || !(f.beta > 0.0))
                        throw DomainError("HyperbolicGamma: A and beta must be positive");
                    if (!(f.A / (1.0 + f.beta) > 1.0))
                        throw DomainError("HyperbolicGamma: gamma(1) = A/(1+beta) must exceed 1");
                } else if constexpr (std::is_same_v<T, SqrtExpansion>) {
                    if (!(f.C > 0.0)) throw DomainError("SqrtExpansion: C must be positive");
                    if (!(f.eps > 0.0)) throw DomainError("SqrtExpansion: eps must be positive");
                } else {
                    if (f.rho.size() < kMinTabulatedNodes)
                        throw DomainError("Tabulated: need at least 11 grid points");
                    for (double v : f.rho)
                        if (!std::isfinite(v) || !(v >= kMinTabulatedRho))
                            throw DomainError("Tabulated: rho must be finite and bounded away from 0");
                }
            },
            family_);
    }

    // --- rho^2 -------------------------------------------------------------

    template <std::floating_point Real>
    static Real rho2_impl(const LinearNoise& f, Real, Real u) {
        return Real(f.C) / (Real(1) - Real(f.D) * u);
    }
    template <std::floating_point Real>
    static Real rho2_impl(const QuadraticNoise& f, Real, Real u) {
        return Real(f.C) / (Real(1) - Real(f.D) * u - Real(f.E) * u * u);
    }
    template <std::floating_point Real>
    static Real rho2_impl(const HyperbolicGamma& f, Real r, Real u) {
        const Real g = Real(f.A) / (u + Real(f.beta));
        return Real(2) * r / (g * g - g);
    }
    template <std::floating_point Real>
    static Real rho2_impl(const SqrtExpansion& f, Real, Real u) {
        return Real(f.C) * Real(f.C) * (u + Real(f.eps));
    }
    template <std::floating_point Real>
    static Real rho2_impl(const Tabulated& f, Real, Real u) {
        const Real rho = tab_rho<Real>(f, u);
        return rho * rho;
    }

    // --- rho, rho' ---------------------------------------------------------

    template <std::floating_point Real>
    static RhoJet<Real> rho_jet_impl(const LinearNoise& f, Real, Real u) {
        const Real den = Real(1) - Real(f.D) * u;
        const Real rho = std::sqrt(Real(f.C) / den);
        return {rho, rho * Real(f.D) / (Real(2) * den)};
    }
    template <std::floating_point Real>
    static RhoJet<Real> rho_jet_impl(const QuadraticNoise& f, Real, Real u) {
        const Real den = Real(1) - Real(f.D) * u - Real(f.E) * u * u;
        const Real rho = std::sqrt(Real(f.C) / den);
        return {rho, rho * (Real(f.D) + Real(2) * Real(f.E) * u) / (Real(2) * den)};
    }
    template <std::floating_point Real>
    static RhoJet<Real> rho_jet_impl(const HyperbolicGamma& f, Real r, Real u) {
        const Real g = Real(f.A) / (u + Real(f.beta));
        const Real g1 = -g / (u + Real(f.beta));
        const Real rho = std::sqrt(Real(2) * r / (g * g - g));
        return {rho, -rho * (Real(2) * g - Real(1)) * g1 / (Real(2) * (g * g - g))};
    }
    template <std::floating_point Real>
    static RhoJet<Real> rho_jet_impl(const SqrtExpansion& f, Real, Real u) {
        const Real s = std::sqrt(u + Real(f.eps));
        return {Real(f.C) * s, Real(f.C) / (Real(2) * s)};
    }
    template <std::floating_point Real>
    static RhoJet<Real> rho_jet_impl(const Tabulated& f, Real, Real u) {
        const std::size_t n = f.rho.size();
        const Real h = Real(1) / Real(n - 1);
        const std::size_t j = tab_cell<Real>(n, u);
        return {tab_rho<Real>(f, u), (Real(f.rho[j + 1]) - Real(f.rho[j])) / h};
    }

    // --- gamma jets --------------------------------------------------------

    template <std::floating_point Real>
    static GammaJet<Real> jet_impl(const LinearNoise& f, Real r, Real u) {
        const Real a = Real(2) * r / Real(f.C);
        return detail::jet_from_q<Real>(a * (Real(1) - Real(f.D) * u), -a * Real(f.D), Real(0), Real(0));
    }
    template <std::floating_point Real>
    static GammaJet<Real> jet_impl(const QuadraticNoise& f, Real r, Real u) {
        const Real a = Real(2) * r / Real(f.C);
        const Real D = Real(f.D), E = Real(f.E);
        return detail::jet_from_q<Real>(a * (Real(1) - D * u - E * u * u), -a * (D + Real(2) * E * u),
                                        -Real(2) * a * E, Real(0));
    }
    template <std::floating_point Real>
    static GammaJet<Real> jet_impl(const HyperbolicGamma& f, Real, Real u) {
        const Real t = Real(1) / (u + Real(f.beta));
        const Real g = Real(f.A) * t;
        return {g, -g * t, Real(2) * g * t * t, Real(-6) * g * t * t * t, true};
    }
    template <std::floating_point Real>
    static GammaJet<Real> jet_impl(const SqrtExpansion& f, Real r, Real u) {
        const Real t = Real(1) / (u + Real(f.eps));
        const Real q = Real(2) * r / (Real(f.C) * Real(f.C)) * t;
        return detail::jet_from_q<Real>(q, -q * t, Real(2) * q * t * t, Real(-6) * q * t * t * t);
    }
    template <std::floating_point Real>
    static GammaJet<Real> jet_impl(const Tabulated& f, Real r, Real u) {
        // gamma from interpolated rho; gamma' and gamma'' are second-order
        // finite differences of nodal gamma (step = grid spacing),
        // interpolated linearly inside a cell.
        const std::size_t n = f.rho.size();
        const Real h = Real(1) / Real(n - 1);
        const std::size_t j = tab_cell<Real>(n, u);
        const Real t = (u - Real(j) * h) / h;
        auto g = [&](std::size_t i) { return detail::gamma_from_rho2<Real>(Real(f.rho[i]) * Real(f.rho[i]), r); };
        auto d1 = [&](std::size_t i) -> Real {
            if (i == 0) return (Real(-3) * g(0) + Real(4) * g(1) - g(2)) / (Real(2) * h);
            if (i == n - 1) return (Real(3) * g(n - 1) - Real(4) * g(n - 2) + g(n - 3)) / (Real(2) * h);
            return (g(i + 1) - g(i - 1)) / (Real(2) * h);
        };
        auto d2 = [&](std::size_t i) -> Real {
            if (i == 0) return (Real(2) * g(0) - Real(5) * g(1) + Real(4) * g(2) - g(3)) / (h * h);
            if (i == n - 1)
                return (Real(2) * g(n - 1) - Real(5) * g(n - 2) + Real(4) * g(n - 3) - g(n - 4)) / (h * h);
            return (g(i + 1) - Real(2) * g(i) + g(i - 1)) / (h * h);
        };
        GammaJet<Real> jet;
        const Real rho = tab_rho<Real>(f, u);
        jet.value = detail::gamma_from_rho2<Real>(rho * rho, r);
        jet.d1 = (Real(1) - t) * d1(j) + t * d1(j + 1);
        jet.d2 = (Real(1) - t) * d2(j) + t * d2(j + 1);
        jet.d3 = Real(0);
        jet.has_d3 = false;
        return jet;
    }

    template <std::floating_point Real>
    static std::size_t tab_cell(std::size_t n, Real u) {
        const auto j = static_cast<std::size_t>(std::floor(u * Real(n - 1)));
        return std::min(j, n - 2);
    }
    template <std::floating_point Real>
    static Real tab_rho(const Tabulated& f, Real u) {
        const std::size_t n = f.rho.size();
        const std::size_t j = tab_cell<Real>(n, u);
        const Real t = u * Real(n - 1) - Real(j);
        return (Real(1) - t) * Real(f.rho[j]) + t * Real(f.rho[j + 1]);
    }

    Family family_;
};

// ---------------------------------------------------------------------------
// Scalar operations
// ---------------------------------------------------------------------------

/// Strict "> 0" threshold, relative to the magnitude of the compared terms.
inline constexpr double kStrictTol = 1e-10;

inline bool strictly_positive(double x, double scale = 1.0) {
    return x > kStrictTol * std::max(1.0, std::abs(scale));
}

/// gamma(u) = 1/2 + sqrt((rho^2 + 8r) / (4 rho^2)), the root > 1 of
/// gamma^2 - gamma - 2r/rho^2 = 0.
template <std::floating_point Real = double>
Real gamma(const RateSpec& spec, const ModelParams& params, Real u) {
    return spec.gamma_jet<Real>(params.r, u).value;
}

template <std::floating_point Real = double>
struct GammaDerivatives {
    Real d1{};
    Real d2{};
    std::optional<Real> d3;
};

template <std::floating_point Real = double>
GammaDerivatives<Real> gamma_derivatives(const RateSpec& spec, const ModelParams& params, Real u) {
    const auto j = spec.gamma_jet<Real>(params.r, u);
    GammaDerivatives<Real> d{j.d1, j.d2, std::nullopt};
    if (j.has_d3) d.d3 = j.d3;
    return d;
}

/// G = (1 - pi) (pi / (1 - pi))^gamma for a given exponent.
template <std::floating_point Real>
Real fundamental_G(Real gamma_value, Real pi) {
    if (!(pi > Real(0) && pi < Real(1))) throw DomainError("fundamental_G: belief must lie in (0,1)");
    return (Real(1) - pi) * std::exp(gamma_value * std::log(pi / (Real(1) - pi)));
}

template <std::floating_point Real = double>
Real fundamental_G(const RateSpec& spec, const ModelParams& params, Real u, Real pi) {
    return fundamental_G<Real>(gamma<Real>(spec, params, u), pi);
}

/// c = k gamma / (k + gamma - 1), the constant-rate stopping threshold.
template <std::floating_point Real>
Real stopping_threshold_c(Real gamma_value, Real k) {
    return k * gamma_value / (k + gamma_value - Real(1));
}

template <std::floating_point Real = double>
Real stopping_threshold_c(const RateSpec& spec, const ModelParams& params, Real u) {
    return stopping_threshold_c<Real>(gamma<Real>(spec, params, u), Real(params.k));
}

/// Value of stopping once at the first time the belief reaches c(u), with the
/// signal-to-noise ratio frozen at rho(u).
template <std::floating_point Real = double>
Real stopping_value_v(const RateSpec& spec, const ModelParams& params, Real u, Real pi) {
    if (!(pi > Real(0) && pi < Real(1))) throw DomainError("stopping_value_v: belief must lie in (0,1)");
    const Real g = gamma<Real>(spec, params, u);
    const Real k = Real(params.k);
    const Real c = stopping_threshold_c<Real>(g, k);
    if (pi >= c) return pi - k;
    return (c - k) * fundamental_G<Real>(g, pi) / fundamental_G<Real>(g, c);
}

/// H(u, pi) = 2(pi - k) gamma'^2 + (gamma k - (gamma + k - 1) pi) gamma''.
/// Its sign at (u, b(u)) is the sign of b'(u).
inline double sign_function_H(const GammaJet<double>& j, double k, double pi) {
    return 2.0 * (pi - k) * j.d1 * j.d1 + (j.value * k - (j.value + k - 1.0) * pi) * j.d2;
}

inline double sign_function_H(const RateSpec& spec, const ModelParams& params, double u, double pi) {
    if (!(pi >= 0.0 && pi <= 1.0)) throw DomainError("sign_function_H: belief must lie in [0,1]");
    return sign_function_H(spec.gamma_jet(params.r, u), params.k, pi);
}

/// 2 gamma'^2 - gamma gamma''; the cond1 / cond2 discriminant.
inline double convexity_discriminant(const GammaJet<double>& j) {
    return 2.0 * j.d1 * j.d1 - j.value * j.d2;
}

inline double discriminant_scale(const GammaJet<double>& j) {
    return std::max(2.0 * j.d1 * j.d1, std::abs(j.value * j.d2));
}

/// Zero of H(u, .), defined only where 2 gamma'^2 - gamma gamma'' > 0.
inline std::optional<double> zero_level_B(const GammaJet<double>& j, double k) {
    const double disc = convexity_discriminant(j);
    if (!strictly_positive(disc, discriminant_scale(j))) return std::nullopt;
    return k * disc / (disc + (1.0 - k) * j.d2);
}

inline std::optional<double> zero_level_B(const RateSpec& spec, const ModelParams& params, double u) {
    return zero_level_B(spec.gamma_jet(params.r, u), params.k);
}

// ---------------------------------------------------------------------------
// Sufficient conditions
// ---------------------------------------------------------------------------

inline constexpr std::size_t kValidationGridSize = 1001;

enum class VerificationRoute {
    ConcaveGamma,  ///< gamma concave with B' > 0: b increasing and b > k expected
    Cond1,         ///< 2 gamma'^2 - gamma gamma'' <= 0: b increasing
    Unverified,
};

inline std::string_view to_string(VerificationRoute r) {
    switch (r) {
        case VerificationRoute::ConcaveGamma: return "b >= k expected";
        case VerificationRoute::Cond1: return "cond1 route";
        case VerificationRoute::Unverified: return "unverified";
    }
    return "unverified";
}

struct ConditionReport {
    std::size_t grid_points = kValidationGridSize;
    bool cond1 = false;          ///< 2 gamma'^2 - gamma gamma'' <= 0 everywhere
    bool cond2_positive = false; ///< 2 gamma'^2 - gamma gamma'' > 0 everywhere
    bool B_increasing = false;   ///< B defined everywhere and strictly increasing on the grid
    bool cond2 = false;          ///< cond2_positive && B_increasing
    bool gamma_concave = false;
    std::optional<bool> cond_gamma;  ///< 3 gamma''^2 < 2 gamma' gamma'''; nullopt if unverifiable
    double max_discriminant = 0.0;   ///< max over grid of 2 gamma'^2 - gamma gamma''
    double max_abs_discriminant = 0.0;
    VerificationRoute route = VerificationRoute::Unverified;

    bool monotone_expected() const { return cond1 || cond2; }
};

/// Sufficient conditions for a monotone boundary, checked on a uniform
/// validation grid over [0,1].
inline ConditionReport check_conditions(const RateSpec& spec, const ModelParams& params,
                                        std::size_t grid_points = kValidationGridSize) {
    params.validate();
    if (grid_points < 2) throw DomainError("check_conditions: need at least 2 grid points");
    ConditionReport rep;
    rep.grid_points = grid_points;
    rep.cond1 = true;
    rep.cond2_positive = true;
    rep.B_increasing = true;
    rep.gamma_concave = true;
    bool cond_gamma = spec.has_third_derivative();
    std::optional<double> prev_B;
    rep.max_discriminant = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double u = (i + 1 == grid_points) ? 1.0 : static_cast<double>(i) / (grid_points - 1);
        const auto j = spec.gamma_jet(params.r, u);
        const double disc = convexity_discriminant(j);
        const double scale = discriminant_scale(j);
        rep.max_discriminant = std::max(rep.max_discriminant, disc);
        rep.max_abs_discriminant = std::max(rep.max_abs_discriminant, std::abs(disc));
        const bool positive = strictly_positive(disc, scale);
        rep.cond1 = rep.cond1 && !positive;
        rep.cond2_positive = rep.cond2_positive && positive;
        if (strictly_positive(j.d2, j.d2)) rep.gamma_concave = false;
        if (cond_gamma && j.has_d3) {
            const double lhs = 2.0 * j.d1 * j.d3 - 3.0 * j.d2 * j.d2;
            cond_gamma = strictly_positive(lhs, std::max(std::abs(2.0 * j.d1 * j.d3), 3.0 * j.d2 * j.d2));
        }
        const auto B = zero_level_B(j, params.k);
        if (!B) {
            rep.B_increasing = false;
        } else {
            if (prev_B && !(*B > *prev_B)) rep.B_increasing = false;
            prev_B = B;
        }
    }
    rep.cond2 = rep.cond2_positive && rep.B_increasing;
    if (spec.has_third_derivative()) rep.cond_gamma = cond_gamma;
    if (rep.cond2 && rep.gamma_concave)
        rep.route = VerificationRoute::ConcaveGamma;
    else if (rep.cond1)
        rep.route = VerificationRoute::Cond1;
    else
        rep.route = VerificationRoute::Unverified;
    return rep;
}

/// Standing assumptions on rho: positive and increasing, hence gamma > 1 and
/// decreasing.
struct AssumptionReport {
    bool rho_positive = true;
    bool rho_increasing = true;
    bool gamma_above_one = true;
    bool gamma_decreasing = true;
    bool ok() const { return rho_positive && rho_increasing && gamma_above_one && gamma_decreasing; }
};

inline AssumptionReport check_assumptions(const RateSpec& spec, const ModelParams& params,
                                          std::size_t grid_points = kValidationGridSize) {
    params.validate();
    AssumptionReport rep;
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double u = (i + 1 == grid_points) ? 1.0 : static_cast<double>(i) / (grid_points - 1);
        const auto rho = spec.rho_jet(params.r, u);
        const auto g = spec.gamma_jet(params.r, u);
        rep.rho_positive = rep.rho_positive && rho.value > 0.0;
        rep.rho_increasing = rep.rho_increasing && rho.d1 > 0.0;
        rep.gamma_above_one = rep.gamma_above_one && g.value > 1.0;
        rep.gamma_decreasing = rep.gamma_decreasing && g.d1 < 0.0;
    }
    return rep;
}

}  // namespace lbd
