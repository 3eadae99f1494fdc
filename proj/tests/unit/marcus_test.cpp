#include "foliated/errors.hpp"
#include "foliated/marcus.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace foliated;

namespace {

// F(y) z = z J y with J the quarter turn.
JumpField rotation_field()
{
    return [](Vec const& y, Vec const& z) { return make_vec({-z[0] * y[1], z[0] * y[0]}); };
}

JumpField constant_field()
{
    return [](Vec const&, Vec const& z) { return Vec(z); };
}

// Smooth nonlinear field for refinement checks.
JumpField pendulum_field()
{
    return [](Vec const& y, Vec const& z) {
        return make_vec({z[0] * y[1], -z[0] * std::sin(y[0])});
    };
}

MarcusProblem scalar_problem(DriftField drift, double horizon, double h)
{
    MarcusProblem p;
    p.drift = std::move(drift);
    p.jump_field = [](Vec const&, Vec const& z) { return Vec(z); };
    p.initial_point = make_vec({1.0});
    p.levy_path.horizon = horizon;
    p.horizon = horizon;
    p.grid_step = h;
    return p;
}

}  // namespace

TEST(MarcusFlow, ZeroJumpIsIdentity)
{
    Vec const x = make_vec({0.3, -1.7});
    EXPECT_EQ(marcus_flow(rotation_field(), x, make_vec({0.0})), x);
}

TEST(MarcusFlow, ConstantFieldTranslates)
{
    Vec const x = make_vec({0.25, -1.5});
    Vec const z = make_vec({0.75, 2.0});
    EXPECT_EQ(marcus_flow(constant_field(), x, z), x + z);
    Vec const w = make_vec({0.1, -0.3});
    EXPECT_LT((marcus_flow(constant_field(), x, w) - (x + w)).norm(), 1e-13);
}

TEST(MarcusFlow, RotationMatchesMatrixExponential)
{
    Vec const x = make_vec({1.0, 0.0});
    double const z = std::numbers::pi / 2;
    auto const R = oracle::expm({{{0.0, -z}, {z, 0.0}}});
    Vec const y = marcus_flow(rotation_field(), x, make_vec({z}), 64);
    EXPECT_NEAR(y[0], R[0][0], 1e-8);
    EXPECT_NEAR(y[1], R[1][0], 1e-8);
    EXPECT_NEAR(y[0], 0.0, 1e-8);
    EXPECT_NEAR(y[1], 1.0, 1e-8);
}

TEST(MarcusFlow, RejectsZeroSteps)
{
    EXPECT_THROW(marcus_flow(constant_field(), make_vec({1.0}), make_vec({1.0}), 0),
                 PreconditionError);
}

TEST(MarcusFlow, DivergenceReportsSigma)
{
    JumpField const blowup = [](Vec const& y, Vec const& z) { return Vec(z[0] * y.cwiseAbs2().cwiseProduct(y)); };
    try
    {
        marcus_flow(blowup, make_vec({1.0}), make_vec({1e6}), 8);
        FAIL() << "expected divergence";
    }
    catch (FlowDivergenceError const& e)
    {
        EXPECT_GT(e.sigma_reached(), 0.0);
        EXPECT_LE(e.sigma_reached(), 1.0);
    }
}

TEST(MarcusFlow, SemigroupProperty)
{
    Vec const x = make_vec({0.4, -0.2});
    Vec const z = make_vec({1.3});
    Vec const once = marcus_flow(pendulum_field(), x, z, 64);
    Vec const half = marcus_flow(pendulum_field(), x, z / 2, 64);
    Vec const twice = marcus_flow(pendulum_field(), half, z / 2, 64);
    EXPECT_LT((once - twice).norm(), 1e-8);
}

TEST(MarcusFlow, FourthOrderConvergence)
{
    Vec const x = make_vec({0.9, 0.3});
    Vec const z = make_vec({2.0});
    Vec const a = marcus_flow(pendulum_field(), x, z, 16);
    Vec const b = marcus_flow(pendulum_field(), x, z, 32);
    Vec const c = marcus_flow(pendulum_field(), x, z, 64);
    double const ratio = (a - b).norm() / (b - c).norm();
    EXPECT_GE(ratio, 8.0);
    EXPECT_LE(ratio, 32.0);
}

TEST(FlowDiagnostics, ConstantFieldHasNoResidual)
{
    auto const d = flow_difference_diagnostics(constant_field(), make_vec({1.0, 2.0}),
                                               make_vec({-1.0, 0.5}), make_vec({0.3, 0.7}));
    // Only rounding from 64 RK4 steps remains.
    EXPECT_LT(d.second_order_residual, 1e-12);
    EXPECT_LT(d.lipschitz_ratio, 1e-12);
}

TEST(FlowDiagnostics, RotationResidualStableUnderHalving)
{
    Vec const x = make_vec({1.0, 0.5});
    std::vector<double> ratios;
    for (double z : {0.1, 0.05, 0.025})
    {
        auto const d = flow_difference_diagnostics(rotation_field(), x, x, make_vec({z}));
        // Oracle: |exp(zJ) x - x - zJx| / z^2 from the matrix exponential.
        auto const R = oracle::expm({{{0.0, -z}, {z, 0.0}}});
        double const r0 = R[0][0] * x[0] + R[0][1] * x[1] - x[0] + z * x[1];
        double const r1 = R[1][0] * x[0] + R[1][1] * x[1] - x[1] - z * x[0];
        EXPECT_NEAR(d.second_order_residual, std::hypot(r0, r1) / (z * z), 1e-6);
        EXPECT_EQ(d.lipschitz_ratio, 0.0);
        ratios.push_back(d.second_order_residual);
    }
    // Residual / z^2 tends to |x| / 2.
    for (double r : ratios)
        EXPECT_NEAR(r, x.norm() / 2, 0.01);
    EXPECT_LT(std::abs(ratios[2] - ratios[1]), std::abs(ratios[1] - ratios[0]));
}

TEST(FlowDiagnostics, RejectsZeroJump)
{
    EXPECT_THROW(flow_difference_diagnostics(rotation_field(), make_vec({1.0, 0.0}),
                                             make_vec({0.0, 1.0}), make_vec({0.0})),
                 PreconditionError);
}

TEST(Integrate, ConstantPathWithoutDriftOrJumps)
{
    auto p = scalar_problem([](Vec const& x) { return Vec(Vec::Zero(x.size())); }, 1.0, 0.01);
    auto const path = integrate(p);
    ASSERT_EQ(path.size(), 101u);
    for (auto const& s : path.states)
        EXPECT_EQ(s[0], 1.0);
}

TEST(Integrate, LinearDecayMatchesClosedForm)
{
    auto p = scalar_problem([](Vec const& x) { return Vec(-x); }, 1.0, 1e-3);
    auto const path = integrate(p);
    EXPECT_NEAR(path.times.back(), 1.0, 1e-15);
    EXPECT_NEAR(path.states.back()[0], std::exp(-1.0), 1e-9);
}

TEST(Integrate, SingleJumpStepPath)
{
    auto p = scalar_problem([](Vec const& x) { return Vec(Vec::Zero(x.size())); }, 1.0, 0.1);
    p.levy_path.events.push_back({0.5, make_vec({0.75})});
    auto const path = integrate(p);
    ASSERT_EQ(path.jump_points.size(), 1u);
    std::size_t const j = path.jump_points.front();
    EXPECT_EQ(path.times[j], 0.5);
    EXPECT_EQ(path.left_limits[j][0], 1.0);
    EXPECT_EQ(path.states[j][0], 1.75);
    for (std::size_t i = 0; i < path.size(); ++i)
        EXPECT_EQ(path.states[i][0], path.times[i] < 0.5 ? 1.0 : 1.75);
}

TEST(Integrate, JumpBetweenGridPointsIsInserted)
{
    auto p = scalar_problem([](Vec const& x) { return Vec(-x); }, 1.0, 0.1);
    p.levy_path.events.push_back({0.333, make_vec({1.0})});
    p.stop_times = {0.777};
    auto const path = integrate(p);
    EXPECT_EQ(path.size(), 13u);
    // Oracle: exact solution with one jump.
    double const before = std::exp(-0.333);
    double const after = (before + 1.0) * std::exp(-(1.0 - 0.333));
    // RK4 at h = 0.1
    EXPECT_NEAR(path.left_limits[path.jump_points.front()][0], before, 1e-6);
    EXPECT_NEAR(path.states.back()[0], after, 1e-6);
}

TEST(Integrate, HalvingStepShrinksError)
{
    auto make = [](double h) {
        MarcusProblem p;
        p.drift = [](Vec const& x) { return make_vec({x[1], -std::sin(x[0]) - 0.2 * x[1]}); };
        p.jump_field = pendulum_field();
        p.initial_point = make_vec({1.0, 0.0});
        p.horizon = 2.0;
        p.levy_path.horizon = 2.0;
        p.levy_path.events = {{0.41, make_vec({0.7})}, {1.3, make_vec({-1.1})}};
        p.grid_step = h;
        return integrate(p);
    };
    auto sup_diff = [](SamplePath const& coarse, SamplePath const& fine) {
        double sup = 0;
        std::size_t j = 0;
        for (std::size_t i = 0; i < coarse.size(); ++i)
        {
            while (fine.times[j] < coarse.times[i] - 1e-12)
                ++j;
            sup = std::max(sup, (coarse.states[i] - fine.states[j]).norm());
        }
        return sup;
    };
    auto const a = make(0.1), b = make(0.05), c = make(0.025);
    EXPECT_GE(sup_diff(a, b) / sup_diff(b, c), 8.0);
}

TEST(Integrate, NonFiniteDriftAborts)
{
    auto p = scalar_problem(
        [](Vec const& x) { return Vec(x.array() * x.array() * x.array() * 1e200); }, 1.0, 0.1);
    EXPECT_THROW(integrate(p), NonFiniteDriftError);
}

TEST(Integrate, DivergingJumpCarriesIndex)
{
    auto p = scalar_problem([](Vec const& x) { return Vec(Vec::Zero(x.size())); }, 1.0, 0.1);
    p.jump_field = [](Vec const& y, Vec const& z) { return Vec(z[0] * y.cwiseAbs2().cwiseProduct(y)); };
    p.levy_path.events = {{0.2, make_vec({0.01})}, {0.6, make_vec({1e6})}};
    try
    {
        integrate(p);
        FAIL() << "expected divergence";
    }
    catch (FlowDivergenceError const& e)
    {
        EXPECT_EQ(e.jump_index(), 1u);
    }
}

TEST(Integrate, RecordsFirstExitAndContinues)
{
    auto p = scalar_problem([](Vec const& x) { return Vec(Vec::Ones(x.size())); }, 2.0, 0.25);
    p.initial_point = make_vec({0.0});
    auto const path = integrate(p, [](Vec const& x) { return x[0] < 1.0; });
    ASSERT_TRUE(path.exit.has_value());
    EXPECT_DOUBLE_EQ(path.exit->time, 1.0);
    EXPECT_DOUBLE_EQ(path.times.back(), 2.0);
    EXPECT_DOUBLE_EQ(path.states.back()[0], 2.0);
}

TEST(Integrate, RejectsBadProblems)
{
    auto p = scalar_problem([](Vec const& x) { return Vec(-x); }, 1.0, 2.0);
    EXPECT_THROW(integrate(p), PreconditionError);
    p.grid_step = 0.1;
    p.stop_times = {0.5, 0.4};
    EXPECT_THROW(integrate(p), PreconditionError);
}

TEST(UniformStepCount, SnapsNearIntegers)
{
    EXPECT_EQ(uniform_step_count(1.0, 1e-3), 1000u);
    EXPECT_EQ(uniform_step_count(0.3, 0.1), 3u);
    EXPECT_EQ(uniform_step_count(1.05, 0.1), 10u);
}
