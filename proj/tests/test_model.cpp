#include <gtest/gtest.h>

#include <cmath>

#include "lbd/model.hpp"

using namespace lbd;

namespace {

const ModelParams kParams{0.1, 0.5};
const RateSpec kLinear(LinearNoise{0.25, 0.9});
const RateSpec kHyper(HyperbolicGamma{1.25, 0.2});
const RateSpec kQuad(QuadraticNoise{0.25, 0.1, 0.8});

// Independent high-precision values (mpmath, 40 digits).
constexpr double kGammaLinear1 = 1.074456264653802866;
constexpr double kGammaLinear0 = 1.524695076595959838;
constexpr double kG_1_09 = 1.059965774055880891;
constexpr double kC1 = 0.935194139889244595;
constexpr double kC0 = 0.743975018237133295;
constexpr double kV_half_1 = 0.190737044783710098;
constexpr double kV_half_0 = 0.093686792347435475;
constexpr double kHyperD1 = -2.551020408163265306;
constexpr double kHyperD2 = 7.288629737609329446;
constexpr double kHyperC1 = 0.961538461538461538;
constexpr double kLinearD1_1 = -0.626679561440512217;
constexpr double kLinearB1 = 0.645064713296414865;

template <class F>
long double central(F f, long double x, long double h) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace

TEST(Gamma, LinearNoiseValues) {
    EXPECT_NEAR(gamma(kLinear, kParams, 1.0), kGammaLinear1, 1e-14);
    EXPECT_NEAR(gamma(kLinear, kParams, 0.0), kGammaLinear0, 1e-14);
}

TEST(Gamma, SolvesQuadratic) {
    for (double u : {0.0, 0.3, 0.77, 1.0}) {
        for (const RateSpec* s : {&kLinear, &kHyper, &kQuad}) {
            const double g = gamma(*s, kParams, u);
            const double rho2 = s->rho2(kParams.r, u);
            EXPECT_NEAR(g * g - g - 2.0 * kParams.r / rho2, 0.0, 1e-12) << s->family_name() << " u=" << u;
            EXPECT_GT(g, 1.0);
        }
    }
}

TEST(Gamma, HyperbolicDerivatives) {
    const auto d = gamma_derivatives(kHyper, kParams, 0.5);
    EXPECT_NEAR(gamma(kHyper, kParams, 0.5), 1.25 / 0.7, 1e-14);
    EXPECT_NEAR(d.d1, kHyperD1, 1e-12);
    EXPECT_NEAR(d.d2, kHyperD2, 1e-11);
    ASSERT_TRUE(d.d3.has_value());
    EXPECT_NEAR(*d.d3, -6.0 * 1.25 / std::pow(0.7, 4), 1e-9);
}

TEST(Gamma, LinearDerivativeAtOne) {
    EXPECT_NEAR(gamma_derivatives(kLinear, kParams, 1.0).d1, kLinearD1_1, 1e-13);
}

TEST(Gamma, DerivativesMatchFiniteDifferences) {
    const RateSpec sqrt_rate(SqrtExpansion{1.0, 0.05});
    for (const RateSpec* s : {&kLinear, &kHyper, &kQuad, &sqrt_rate}) {
        for (long double u : {0.2L, 0.5L, 0.8L}) {
            const auto j = s->gamma_jet<long double>(kParams.r, u);
            auto g = [&](long double x) { return s->gamma_jet<long double>(kParams.r, x).value; };
            auto g1 = [&](long double x) { return s->gamma_jet<long double>(kParams.r, x).d1; };
            auto g2 = [&](long double x) { return s->gamma_jet<long double>(kParams.r, x).d2; };
            auto rho = [&](long double x) { return s->rho_jet<long double>(kParams.r, x).value; };
            const auto scale = [](long double v) { return 1e-7L * std::max(1.0L, std::abs(v)); };
            EXPECT_NEAR(j.d1, central(g, u, 1e-5L), scale(j.d1)) << s->family_name();
            EXPECT_NEAR(j.d2, central(g1, u, 1e-5L), scale(j.d2)) << s->family_name();
            EXPECT_NEAR(j.d3, central(g2, u, 1e-5L), scale(j.d3)) << s->family_name();
            const auto r = s->rho_jet<long double>(kParams.r, u);
            EXPECT_NEAR(r.d1, central(rho, u, 1e-5L), scale(r.d1)) << s->family_name();
        }
    }
}

TEST(Fundamental, GValue) {
    EXPECT_NEAR(fundamental_G(kLinear, kParams, 1.0, 0.9), kG_1_09, 1e-13);
    EXPECT_THROW(fundamental_G(1.5, 0.0), DomainError);
    EXPECT_THROW(fundamental_G(1.5, 1.0), DomainError);
}

TEST(Stopping, ThresholdAndValue) {
    EXPECT_NEAR(stopping_threshold_c(kLinear, kParams, 1.0), kC1, 1e-14);
    EXPECT_NEAR(stopping_threshold_c(kLinear, kParams, 0.0), kC0, 1e-14);
    EXPECT_NEAR(stopping_threshold_c(kHyper, kParams, 1.0), kHyperC1, 1e-14);
    EXPECT_NEAR(stopping_value_v(kLinear, kParams, 1.0, 0.5), kV_half_1, 1e-13);
    EXPECT_NEAR(stopping_value_v(kLinear, kParams, 0.0, 0.5), kV_half_0, 1e-13);
    // Above the threshold the benchmark stops at once.
    EXPECT_DOUBLE_EQ(stopping_value_v(kLinear, kParams, 0.0, 0.9), 0.4);
}

TEST(Stopping, ThresholdAboveK) {
    for (double u = 0.0; u <= 1.0; u += 0.125) {
        const double c = stopping_threshold_c(kLinear, kParams, u);
        EXPECT_GT(c, kParams.k);
        EXPECT_LT(c, 1.0);
    }
}

TEST(ZeroLevel, LinearClosedForm) {
    EXPECT_NEAR(*zero_level_B(kLinear, kParams, 1.0), kLinearB1, 1e-13);
    for (double u = 0.0; u <= 1.0; u += 0.05) {
        const double g = gamma(kLinear, kParams, u), k = kParams.k;
        const auto B = zero_level_B(kLinear, kParams, u);
        ASSERT_TRUE(B.has_value());
        EXPECT_NEAR(*B, (3 * g - 1) * k / (3 * g + k - 2), 1e-10) << "u=" << u;
        EXPECT_NEAR(sign_function_H(kLinear, kParams, u, *B), 0.0, 1e-12);
    }
}

TEST(Conditions, LinearNoise) {
    const auto c = check_conditions(kLinear, kParams);
    EXPECT_TRUE(c.cond2);
    EXPECT_FALSE(c.cond1);
    EXPECT_TRUE(c.gamma_concave);
    ASSERT_TRUE(c.cond_gamma.has_value());
    EXPECT_TRUE(*c.cond_gamma);
    EXPECT_EQ(c.route, VerificationRoute::ConcaveGamma);
    EXPECT_EQ(to_string(c.route), "b >= k expected");
}

TEST(Conditions, HyperbolicHoldsWithEquality) {
    const auto c = check_conditions(kHyper, kParams);
    EXPECT_TRUE(c.cond1);
    EXPECT_LE(c.max_abs_discriminant, 1e-12);
    EXPECT_EQ(c.route, VerificationRoute::Cond1);
    EXPECT_EQ(to_string(c.route), "cond1 route");
}

TEST(Conditions, QuadraticUnverified) {
    const auto c = check_conditions(kQuad, kParams);
    EXPECT_FALSE(c.monotone_expected());
    EXPECT_EQ(c.route, VerificationRoute::Unverified);
}

TEST(Assumptions, StandardFamilies) {
    for (const RateSpec* s : {&kLinear, &kHyper, &kQuad}) EXPECT_TRUE(check_assumptions(*s, kParams).ok());
    std::vector<double> falling(21);
    for (std::size_t i = 0; i < falling.size(); ++i) falling[i] = 1.0 - 0.02 * static_cast<double>(i);
    EXPECT_FALSE(check_assumptions(RateSpec(Tabulated{falling}), kParams).ok());
}

TEST(Tabulated, ApproximatesLinearNoise) {
    std::vector<double> rho(201);
    for (std::size_t i = 0; i < rho.size(); ++i)
        rho[i] = std::sqrt(kLinear.rho2(kParams.r, static_cast<double>(i) / 200.0));
    const RateSpec tab(Tabulated{rho});
    EXPECT_FALSE(tab.has_third_derivative());
    EXPECT_FALSE(gamma_derivatives(tab, kParams, 0.5).d3.has_value());
    EXPECT_FALSE(check_conditions(tab, kParams).cond_gamma.has_value());
    for (double u : {0.0, 0.33, 0.5, 1.0}) {
        EXPECT_NEAR(gamma(tab, kParams, u), gamma(kLinear, kParams, u), 1e-4);
        EXPECT_NEAR(gamma_derivatives(tab, kParams, u).d1, gamma_derivatives(kLinear, kParams, u).d1, 5e-3);
    }
}

TEST(Validation, BadInputs) {
    EXPECT_THROW(RateSpec(LinearNoise{0.25, 1.0}), DomainError);
    EXPECT_THROW(RateSpec(LinearNoise{-1.0, 0.5}), DomainError);
    EXPECT_THROW(RateSpec(QuadraticNoise{0.25, 0.5, 0.6}), DomainError);
    EXPECT_THROW(RateSpec(HyperbolicGamma{1.0, 0.2}), DomainError);
    EXPECT_THROW(RateSpec(Tabulated{std::vector<double>(5, 1.0)}), DomainError);
    EXPECT_THROW(kLinear.gamma_jet(0.1, 1.5), DomainError);
    EXPECT_THROW(kLinear.gamma_jet(0.1, -0.1), DomainError);
    EXPECT_THROW((ModelParams{0.0, 0.5}).validate(), DomainError);
    EXPECT_THROW((ModelParams{0.1, 1.0}).validate(), DomainError);
    EXPECT_THROW(ModelParams::from_project(0.1, 1.0, 2.0), DomainError);
}

TEST(Validation, ThresholdFromProjectValues) {
    const auto p = ModelParams::from_project(0.1, -1.0, 3.0);
    EXPECT_DOUBLE_EQ(p.k, 0.25);
}
