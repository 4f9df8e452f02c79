#include <gtest/gtest.h>

#include <cmath>

#include "lbd/boundary.hpp"

using namespace lbd;

namespace {

const ModelParams kParams{0.1, 0.5};
const RateSpec kLinear(LinearNoise{0.25, 0.9});
const RateSpec kHyper(HyperbolicGamma{1.25, 0.2});
const RateSpec kQuad(QuadraticNoise{0.25, 0.1, 0.8});

const BoundaryCurve& linear_curve() {
    static const BoundaryCurve c = solve_boundary(kLinear, kParams, 2001);
    return c;
}

const BoundaryCurve& hyper_curve() {
    static const BoundaryCurve c = solve_boundary(kHyper, kParams, 2001);
    return c;
}

}  // namespace

TEST(Boundary, TerminalCondition) {
    const auto& c = linear_curve();
    const double g1 = gamma(kLinear, kParams, 1.0);
    EXPECT_EQ(c.u.back(), 1.0);
    EXPECT_NEAR(c.back(), kParams.k * g1 / (kParams.k + g1 - 1.0), 1e-12);
    EXPECT_NEAR(c.back(), 0.935194139889244595, 1e-12);
}

TEST(Boundary, StaysInStrip) {
    for (const auto* c : {&linear_curve(), &hyper_curve()}) {
        const auto chk = validate_curve(*c);
        EXPECT_TRUE(chk.ok());
        EXPECT_GT(chk.min_margin, 1e-10);
        for (std::size_t i = 0; i + 1 < c->size(); ++i) {
            EXPECT_GT(c->b[i], 0.0);
            EXPECT_LT(c->b[i], c->c[i]);
        }
    }
}

TEST(Boundary, GridDoubling) {
    for (const RateSpec* s : {&kLinear, &kHyper}) {
        const auto coarse = solve_boundary(*s, kParams, 2001);
        const auto fine = solve_boundary(*s, kParams, 4001);
        double diff = 0.0;
        for (std::size_t i = 0; i < coarse.size(); ++i) diff = std::max(diff, std::abs(coarse.b[i] - fine.b[2 * i]));
        EXPECT_LE(diff, 1e-8) << s->family_name();
        // Hermite interpolation between nodes against the refined nodes.
        double mid = 0.0;
        for (std::size_t i = 0; i + 1 < coarse.size(); ++i)
            mid = std::max(mid, std::abs(coarse.value(0.5 * (coarse.u[i] + coarse.u[i + 1])) - fine.b[2 * i + 1]));
        EXPECT_LE(mid, 1e-9) << s->family_name();
    }
}

TEST(Boundary, LinearNoiseMonotoneAboveK) {
    const auto& c = linear_curve();
    EXPECT_TRUE(c.monotone);
    EXPECT_TRUE(c.above_k);
    EXPECT_NEAR(c.front(), 0.677203576894, 1e-10);
    EXPECT_NEAR(c.value(0.5), 0.735598059885, 1e-10);
    EXPECT_TRUE(level_crossings(c, kParams.k).empty());
}

TEST(Boundary, HyperbolicSingleCrossing) {
    const auto& c = hyper_curve();
    EXPECT_TRUE(c.monotone);
    EXPECT_FALSE(c.above_k);
    EXPECT_LT(c.front(), kParams.k);
    EXPECT_NEAR(c.front(), 0.450928538576, 1e-10);
    const auto x = level_crossings(c, kParams.k);
    ASSERT_EQ(x.size(), 1u);
    EXPECT_NEAR(x[0], 0.2678336247, 1e-8);
    EXPECT_NEAR(c.back(), 0.961538461538461538, 1e-12);
}

TEST(Boundary, QuadraticNotMonotone) {
    const auto c = solve_boundary(kQuad, kParams, 2001);
    EXPECT_FALSE(c.monotone);
    EXPECT_TRUE(validate_curve(c).ok());
    EXPECT_THROW(BoundaryInverse{c}, PreconditionError);
}

TEST(Boundary, SlopeSignFollowsH) {
    for (const RateSpec* s : {&kLinear, &kHyper, &kQuad}) {
        const auto c = solve_boundary(*s, kParams, 401);
        for (std::size_t i = 0; i + 1 < c.size(); ++i) {
            const double H = sign_function_H(*s, kParams, c.u[i], c.b[i]);
            if (std::abs(H) < 1e-8) continue;
            EXPECT_EQ(H > 0.0, c.slope[i] > 0.0) << s->family_name() << " u=" << c.u[i];
        }
    }
}

TEST(Boundary, GuardedRightHandSide) {
    EXPECT_THROW(rhs_F(kLinear, kParams, 0.5, 0.99), GuardError);
    EXPECT_THROW(rhs_F(kLinear, kParams, 0.5, -0.1), GuardError);
    EXPECT_NO_THROW(rhs_F(kLinear, kParams, 0.5, 0.7));
}

TEST(Boundary, BadArguments) {
    EXPECT_THROW(solve_boundary(kLinear, kParams, 1), DomainError);
    std::vector<double> falling(21);
    for (std::size_t i = 0; i < falling.size(); ++i) falling[i] = 1.0 - 0.02 * static_cast<double>(i);
    EXPECT_THROW(solve_boundary(RateSpec(Tabulated{falling}), kParams, 101), PreconditionError);
}

TEST(Curve, RoundTripFromSamples) {
    const auto& c = linear_curve();
    const auto r = curve_from_samples(kLinear, kParams, c.u, c.b);
    EXPECT_EQ(r.b, c.b);
    EXPECT_EQ(r.slope, c.slope);
    EXPECT_TRUE(validate_curve(r).ok());
    EXPECT_THROW(curve_from_samples(kLinear, kParams, {0.0, 0.5, 0.4, 1.0}, {0.7, 0.7, 0.7, 0.9}), ConfigError);
    EXPECT_THROW(curve_from_samples(kLinear, kParams, {0.1, 1.0}, {0.7, 0.9}), ConfigError);
}

TEST(Curve, TamperingDetected) {
    auto b = linear_curve().b;
    b[1000] += 1e-4;
    const auto r = curve_from_samples(kLinear, kParams, linear_curve().u, b);
    const auto chk = validate_curve(r);
    EXPECT_FALSE(chk.ode_ok);
    EXPECT_TRUE(chk.terminal_ok);
}

TEST(Inverse, InvertsBoundary) {
    const auto& c = linear_curve();
    const auto h = invert_boundary(c);
    EXPECT_EQ(h(0.1), 0.0);
    EXPECT_EQ(h(c.front()), 0.0);
    EXPECT_EQ(h(0.99), 1.0);
    for (double u = 0.0; u <= 1.0; u += 0.0371) {
        EXPECT_NEAR(h(c.value(u)), u, 1e-11);
        EXPECT_NEAR(static_cast<double>(h(static_cast<long double>(c.value<long double>(u)))), u, 1e-11);
    }
    // h is nondecreasing.
    double prev = 0.0;
    for (double pi = 0.6; pi < 0.95; pi += 0.001) {
        const double x = h(pi);
        EXPECT_GE(x, prev);
        prev = x;
    }
}
