#include "oracles.hpp"
#include "rdnet/model.hpp"
#include "rdnet/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace rdnet {
namespace {

TEST(Activation, RegistryEvaluations)
{
    EXPECT_NEAR(ScalarFunction::affine(0.05, -0.3)(6.0), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(ScalarFunction::identity()(3.5), 3.5);
    EXPECT_DOUBLE_EQ(ScalarFunction::saturation()(4.0), 1.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::saturation()(-0.25), -0.25);
    EXPECT_DOUBLE_EQ(ScalarFunction::polynomial({1.0, 0.0, 2.0})(3.0), 19.0);
    const auto tab = ScalarFunction::tabulated({0.0, 1.0, 3.0}, {0.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(tab(0.5), 1.0);
    EXPECT_DOUBLE_EQ(tab(2.0), 2.5);
    EXPECT_DOUBLE_EQ(tab(10.0), 3.0);
    EXPECT_DOUBLE_EQ(*tab.exact_lipschitz(), 2.0);
    const auto g = presets::switched_activation();
    EXPECT_NEAR(g(0, 0.0), 39.0 / 4.0, 1e-15);
    EXPECT_NEAR(g(1, 2.0), (39.0 + 4.0 + 1e-6 * std::sin(2.0)) / 4.0, 1e-15);
    EXPECT_THROW(ScalarFunction::tabulated({1.0, 0.0}, {0.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(fn_kind_from_string("bogus"), std::invalid_argument);
}

TEST(CubeRoot, BranchValuesAndAntiderivative)
{
    const double D = 0.7, A = 1.3, mu1 = 12.0;
    const double k = D / A * mu1;
    EXPECT_EQ(cube_root_activation(0.0, D, A, mu1), 0.0);
    EXPECT_EQ(cube_root_antiderivative(0.0, D, A, mu1), 0.0);
    // Both branches meet at u = +-1.
    EXPECT_NEAR(cube_root_activation(1.0, D, A, mu1), k, 1e-14);
    EXPECT_NEAR(cube_root_activation(std::nextafter(1.0, 2.0), D, A, mu1), k, 1e-12);
    EXPECT_NEAR(cube_root_activation(-1.0, D, A, mu1), -k, 1e-14);
    EXPECT_NEAR(cube_root_activation(std::nextafter(-1.0, -2.0), D, A, mu1), -k, 1e-12);
    // Odd symmetry.
    for (double u : {0.3, 1.7, 8.0, 125.0})
        EXPECT_NEAR(cube_root_activation(-u, D, A, mu1), -cube_root_activation(u, D, A, mu1), 1e-12);
    // F' = f by central differences.
    for (double u : {-27.0, -3.0, -1.5, -0.4, 0.2, 0.9, 1.2, 5.0, 64.0}) {
        const double fd = oracle::central_difference(
            [&](double s) { return cube_root_antiderivative(s, D, A, mu1); }, u, 1e-6);
        EXPECT_NEAR(fd, cube_root_activation(u, D, A, mu1), 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(CubeRoot, AliasesMatchCubeRoot)
{
    const double D = 1.0, A = 2.0, mu1 = 10.0;
    EXPECT_EQ(statement2_f(0.0, D, A, mu1), 0.0);
    EXPECT_EQ(statement2_F(0.0, D, A, mu1), 0.0);
    for (double u : {-8.0, -1.0, -0.3, 0.5, 1.0, 27.0}) {
        EXPECT_EQ(statement2_f(u, D, A, mu1), cube_root_activation(u, D, A, mu1));
        EXPECT_EQ(statement2_F(u, D, A, mu1), cube_root_antiderivative(u, D, A, mu1));
    }
    EXPECT_NEAR(statement2_f(std::nextafter(1.0, 2.0), D, A, mu1), statement2_f(1.0, D, A, mu1), 1e-12);
}

TEST(CubeRoot, SampledLipschitzEqualsLinearSlope)
{
    const double D = 1.0, A = 2.0, mu1 = 1.0 + std::numbers::pi * std::numbers::pi;
    const auto act = Activation::uniform(ScalarFunction::cube_root(D, A, mu1), 1, D / A * mu1);
    const auto v = check_A1_sampled(act, uniform_box(1, -50.0, 50.0), 20001);
    EXPECT_TRUE(v.holds);
    EXPECT_NEAR(v.worst_ratio, D / A * mu1, 0.01 * D / A * mu1);
}

TEST(A1, SwitchedActivationHolds)
{
    const auto v = check_A1_sampled(presets::switched_activation(), uniform_box(2, -10.0, 10.0), 10000);
    EXPECT_TRUE(v.holds);
    EXPECT_LE(v.worst_ratio, 0.50000025 + 1e-8);
    EXPECT_GT(v.worst_ratio, 0.4999);
}

TEST(A1, IdentityAndAffineAreExact)
{
    const auto id = check_A1_sampled(Activation::uniform(ScalarFunction::identity(), 1, 1.0), uniform_box(1, -5, 5), 100);
    EXPECT_TRUE(id.holds);
    EXPECT_EQ(id.worst_ratio, 1.0);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    for (int k = 0; k < 20; ++k) {
        const double a = U(rng), b = U(rng);
        const auto v = check_A1_sampled(Activation::uniform(ScalarFunction::affine(a, b), 1, std::abs(a)),
                                        uniform_box(1, -100, 100), 50);
        EXPECT_TRUE(v.holds);
        EXPECT_NEAR(v.worst_ratio, std::abs(a), 1e-12);
    }
}

TEST(A1, SquareFailsWithSlopeNearFour)
{
    // Slope oracle: |d/ds s^2| = 2|s| <= 4 on [-2, 2].
    const auto act = Activation::uniform(ScalarFunction::polynomial({0.0, 0.0, 1.0}), 1, 1.0);
    const auto v = check_A1_sampled(act, uniform_box(1, -2.0, 2.0), 4001);
    EXPECT_FALSE(v.holds);
    EXPECT_NEAR(v.worst_ratio, 4.0, 0.01);
    ASSERT_TRUE(v.witness.has_value());
    EXPECT_GT(std::abs(v.witness->s + v.witness->t), 1.0);
}

TEST(A1, FailuresPersistOnSupersets)
{
    const auto act = Activation::uniform(ScalarFunction::polynomial({0.0, 0.0, 1.0}), 1, 2.5);
    const auto small = check_A1_sampled(act, uniform_box(1, 1.0, 2.0), 5);
    ASSERT_FALSE(small.holds);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(0.0, 50.0);
    for (int k = 0; k < 30; ++k) {
        const Box bigger{{1.0 - U(rng), 2.0 + U(rng)}};
        const SlopeWitness w = *small.witness;
        const auto v = check_A1_sampled(act, bigger, 3, static_cast<std::uint64_t>(k), {&w, 1});
        EXPECT_FALSE(v.holds);
        EXPECT_GE(v.worst_ratio, small.worst_ratio);
    }
}

TEST(A1, NonFiniteEvaluationIsAnError)
{
    const auto act = Activation::uniform(ScalarFunction::polynomial({0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1e300}), 1, 1.0);
    EXPECT_THROW(check_A1_sampled(act, uniform_box(1, -1e10, 1e10), 10), std::domain_error);
}

TEST(A2, SwitchedModesHoldWithLargeC)
{
    const auto net = presets::switched_example(1);
    for (const auto& mode : net.modes) {
        const auto v = check_A2_on_box(mode, net.activation, 1e8, uniform_box(2, -10.0, 10.0), 2000, true);
        EXPECT_TRUE(v.holds);
        EXPECT_GT(v.min_value, 0.0);
    }
}

TEST(A2, SignedCheckRejectsNegativeValues)
{
    const Mode m = presets::scalar_mode(1.0, 1.0, 0.0, 0.0, 0.0, RectDomain::interval(1.0));
    const auto act = Activation::uniform(ScalarFunction::identity(), 1, 1.0);
    const auto v = check_A2_on_box(m, act, 1.0, uniform_box(1, -1.0, 1.0), 101, true);
    EXPECT_FALSE(v.holds);
    ASSERT_TRUE(v.violation.has_value());
    EXPECT_GT((*v.violation)(0), 0.0);
    // v = 1 on its own violates as well.
    const Vec one = Vec::Ones(1);
    const auto at_one = check_A2_on_box(m, act, 1.0, uniform_box(1, 1.0, 1.0 + 1e-12), 2, true, 1, {&one, 1});
    EXPECT_FALSE(at_one.holds);
}

TEST(A2, AbsoluteCheckOnNonconstantEquilibriumNetwork)
{
    // w(v) = -1.785 v + 1, so max |w| on [-100, 100] is 179.5 at v = -100.
    const auto net = presets::nonconstant_equilibrium();
    const auto& mode = net.modes[0];
    const double D = mode.D(0);
    const auto weak = check_A2_on_box(mode, net.activation, 1e4, uniform_box(1, -100, 100), 1001, false);
    EXPECT_FALSE(weak.holds);
    EXPECT_NEAR(weak.worst_upper_ratio * 1e4 * D, 179.5, 1e-9);
    const auto strong = check_A2_on_box(mode, net.activation, 2e5, uniform_box(1, -100, 100), 1001, false);
    EXPECT_TRUE(strong.holds);
}

TEST(A2, ViolationsPersistOnSupersets)
{
    const Mode m = presets::scalar_mode(1.0, 1.0, 0.0, 0.0, 0.0, RectDomain::interval(1.0));
    const auto act = Activation::uniform(ScalarFunction::identity(), 1, 1.0);
    const auto v = check_A2_on_box(m, act, 5.0, uniform_box(1, 5.5, 6.0), 3, false);
    ASSERT_FALSE(v.holds);
    const Vec w = *v.violation;
    const auto big = check_A2_on_box(m, act, 5.0, uniform_box(1, -7.0, 7.0), 2, false, 1, {&w, 1});
    EXPECT_FALSE(big.holds);
}

CGSystem scalar_cg(const ScalarFunction& a, const ScalarFunction& b, const ScalarFunction& f)
{
    CGSystem cg;
    cg.a = {a};
    cg.b = {b};
    cg.f = {f};
    cg.g = {f};
    cg.h = {f};
    cg.A_lo = cg.A_hi = Vec::Ones(1);
    cg.Bslope = Vec::Constant(1, 2.0);
    cg.F = cg.G = cg.H = Vec::Ones(1);
    cg.C = cg.D = cg.N = Mat::Zero(1, 1);
    cg.M = cg.R = cg.P = Vec::Ones(1);
    cg.I = Vec::Zero(1);
    return cg;
}

TEST(HConditions, UnitAmplificationLinearDecayTanh)
{
    const auto cg = scalar_cg(ScalarFunction::affine(0.0, 1.0), ScalarFunction::affine(2.0, 0.0),
                              ScalarFunction::hyperbolic_tangent());
    const auto v = check_H_conditions(cg, uniform_box(1, -10, 10), 4001);
    EXPECT_TRUE(v.h1.holds);
    EXPECT_DOUBLE_EQ(v.h1.worst_ratio, 1.0);
    EXPECT_TRUE(v.h2.holds);
    EXPECT_DOUBLE_EQ(v.h2.worst_ratio, 2.0);
    EXPECT_TRUE(v.h3.holds);
    EXPECT_NEAR(v.h3.worst_ratio, 1.0, 1e-3);
    EXPECT_TRUE(v.all());
}

TEST(HConditions, DetectsViolations)
{
    auto cg = scalar_cg(ScalarFunction::affine(0.0, 1.5), ScalarFunction::hyperbolic_tangent(),
                        ScalarFunction::affine(-1.0, 0.0));
    const auto v = check_H_conditions(cg, uniform_box(1, -10, 10), 501);
    EXPECT_FALSE(v.h1.holds); // a = 1.5 > A_hi = 1
    EXPECT_FALSE(v.h2.holds); // tanh flattens below slope 2
    EXPECT_FALSE(v.h3.holds); // decreasing f
}

TEST(ModeModel, LambdaTracksDomainAndValidation)
{
    const auto net = presets::switched_example(1);
    for (int s = 0; s < 3; ++s) {
        EXPECT_NEAR(net.modes[static_cast<std::size_t>(s)].lambda1, presets::kSwitchedLambda[s], 1e-3);
        EXPECT_NEAR(net.modes[static_cast<std::size_t>(s)].lambda1,
                    first_eigenvalue(net.modes[static_cast<std::size_t>(s)].domain), 1e-12);
    }
    EXPECT_NO_THROW(net.validate());
    const auto moved = net.on_common_domain(RectDomain::rectangle(1.0, 1.0));
    for (const auto& m : moved.modes) EXPECT_NEAR(m.lambda1, 19.7392, 1e-4);

    EXPECT_THROW(presets::scalar_mode(0.0, 1.0, 0, 0, 0, RectDomain::interval(1.0)), std::invalid_argument);
    auto bad = net;
    bad.q = 1.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = net;
    bad.Psi(0, 0) = -1.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = net;
    bad.delay = DelaySpec::sinusoid(1.0, 0.8, 0.5, 2.0);
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad.delay = DelaySpec::sinusoid(1.0, 0.5, 0.5, 2.0);
    EXPECT_NO_THROW(bad.validate());
}

} // namespace
} // namespace rdnet
