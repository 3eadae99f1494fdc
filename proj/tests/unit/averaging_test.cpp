#include "foliated/averaging.hpp"
#include "foliated/errors.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace foliated;

namespace {

Observable leaf_coordinate()
{
    Observable h;
    h.id = "u";
    h.field = [](Vec const& x) { return make_vec({x[0]}); };
    return h;
}

}  // namespace

TEST(EstimateQ, ConstantObservableIsExact)
{
    auto const sys = builtin_system("ou_lines");
    auto const est = estimate_Q(sys, constant_observable(make_vec({2.5})), make_vec({0.3}), 10.0,
                                4, {7, 0});
    EXPECT_EQ(est.value[0], 2.5);
    EXPECT_EQ(est.std_error, 0.0);
    EXPECT_EQ(est.replications, 4u);
    EXPECT_EQ(est.h_id, "constant");
}

TEST(EstimateQ, LeafMeanIsZero)
{
    auto const sys = builtin_system("ou_lines");
    auto const est = estimate_Q(sys, leaf_coordinate(), make_vec({0.0}), 400.0, 8, {3, 0});
    EXPECT_NEAR(est.value[0], 0.0, 4 * est.std_error);
}

TEST(EstimateQ, SecondMomentMatchesOracles)
{
    auto const sys = builtin_system("ou_lines");
    auto const h = vertical_perturbation_observable(sys);
    auto const est = estimate_Q(sys, h, make_vec({0.0}), 400.0, 8, {5, 0});
    double const ode = oracle::ou_second_moment_ode(1.0, 1.0 / 3.0, 20.0);
    EXPECT_NEAR(est.value[0], ode, 4 * est.std_error + 1e-4);

    int const reps = 8;
    double sum = 0, sq = 0;
    for (int r = 0; r < reps; ++r)
    {
        double const m = oracle::ou_time_average_u2(1.0, 1.0, 400.0, 40.0, 77 + r);
        sum += m;
        sq += m * m;
    }
    double const mean = sum / reps;
    double const se = std::sqrt((sq / reps - mean * mean) / (reps - 1));
    EXPECT_NEAR(est.value[0], mean, 4 * std::hypot(se, est.std_error));
}

TEST(EstimateQ, LeafStartDoesNotMatter)
{
    auto const sys = builtin_system("ou_lines");
    auto const h = vertical_perturbation_observable(sys);
    auto const a = estimate_Q(sys, h, make_vec({0.0}), 400.0, 8, {11, 0});
    auto const b = estimate_Q(sys, h, make_vec({0.0}), 400.0, 8, {11, 100}, {}, make_vec({2.0}));
    EXPECT_NEAR(a.value[0], b.value[0], 4 * std::hypot(a.std_error, b.std_error));
}

TEST(EstimateQ, Preconditions)
{
    auto const sys = builtin_system("ou_lines");
    auto const h = constant_observable(make_vec({1.0}));
    EXPECT_THROW(estimate_Q(sys, h, make_vec({9.0}), 10.0, 2, {}), PreconditionError);
    EXPECT_THROW(estimate_Q(sys, h, make_vec({0.0}), 10.0, 0, {}), PreconditionError);
    NumericParams bad;
    bad.burn_in_fraction = 1.0;
    EXPECT_THROW(estimate_Q(sys, h, make_vec({0.0}), 10.0, 2, {}, bad), PreconditionError);
    EXPECT_THROW(estimate_Q(sys, h, make_vec({0.0}), 10.0, 2, {}, {}, make_vec({1.0, 2.0})),
                 PreconditionError);
}

TEST(Eta0, ConstantObservableHasNoError)
{
    auto const sys = builtin_system("ou_lines");
    auto const est = estimate_eta0(sys, constant_observable(make_vec({1.0})), make_vec({0.0}),
                                   {1.0, 2.0, 4.0}, 4, 2.0, {1, 0});
    for (double e : est.lp_errors)
        EXPECT_EQ(e, 0.0);
    EXPECT_FALSE(est.fit.has_value());
}

TEST(Eta0, ErrorsDecayWithTime)
{
    auto const sys = builtin_system("ou_lines");
    auto const est = estimate_eta0(sys, vertical_perturbation_observable(sys), make_vec({0.0}),
                                   {2.0, 16.0, 128.0}, 16, 2.0, {2, 0});
    ASSERT_EQ(est.lp_errors.size(), 3u);
    EXPECT_GT(est.lp_errors[0], est.lp_errors[1]);
    EXPECT_GT(est.lp_errors[1], est.lp_errors[2]);
    ASSERT_TRUE(est.fit.has_value());
    EXPECT_GT(est.fit->rate, 0.0);
    EXPECT_EQ(est.q_reference[0], 1.0 / 6.0);
}

TEST(Eta0, MissingAverage)
{
    auto const sys = builtin_system("ou_lines");
    EXPECT_THROW(estimate_eta0(sys, leaf_coordinate(), make_vec({0.0}), {1.0}, 2, 2.0, {}, {},
                               false),
                 QUnavailableError);
    auto const with_reference
        = estimate_eta0(sys, leaf_coordinate(), make_vec({0.0}), {1.0, 2.0}, 2, 2.0, {}, {}, true);
    EXPECT_EQ(with_reference.lp_errors.size(), 2u);
    EXPECT_THROW(estimate_eta0(sys, leaf_coordinate(), make_vec({0.0}), {2.0, 1.0}, 2, 2.0, {}),
                 PreconditionError);
    EXPECT_THROW(estimate_eta0(sys, leaf_coordinate(), make_vec({0.0}), {1.0}, 2, 1.5, {}),
                 PreconditionError);
}

TEST(FitDecay, RecoversExactCurves)
{
    std::vector<double> const t{1, 2, 4, 8, 16};
    std::vector<double> expo, power;
    for (double s : t)
    {
        expo.push_back(2.0 * std::exp(-0.5 * s));
        power.push_back(3.0 * std::pow(s, -0.7));
    }
    auto const e = fit_decay(t, expo);
    ASSERT_TRUE(e.has_value());
    EXPECT_EQ(e->kind, DecayKind::exponential);
    EXPECT_NEAR(e->rate, 0.5, 1e-12);
    EXPECT_NEAR(e->amplitude, 2.0, 1e-11);
    EXPECT_NEAR((*e)(3.0), 2.0 * std::exp(-1.5), 1e-11);

    auto const p = fit_decay(t, power);
    ASSERT_TRUE(p.has_value());
    EXPECT_EQ(p->kind, DecayKind::power);
    EXPECT_NEAR(p->rate, 0.7, 1e-12);
    EXPECT_NEAR(p->amplitude, 3.0, 1e-11);

    EXPECT_FALSE(fit_decay({1.0}, {0.5}).has_value());
    EXPECT_FALSE(fit_decay({1.0, 2.0}, {0.5, 0.0}).has_value());
}

TEST(IntegrateAveraged, LinearDecay)
{
    auto const sys = builtin_system("ou_lines");
    LevyPath empty;
    empty.horizon = 1.0;
    AveragedField const q = [](Vec const& v) { return Vec(-v); };
    auto const path = integrate_averaged(sys, q, make_vec({1.0}), 1.0, empty, 1e-3);
    EXPECT_NEAR(path.states.back()[0], std::exp(-1.0), 1e-9);
    EXPECT_FALSE(path.exit.has_value());
}

TEST(IntegrateAveraged, ZeroFieldsKeepStart)
{
    SystemParams params;
    params.beta = 0.0;
    auto const sys = builtin_system("ou_lines", params);
    LevyPath path;
    path.horizon = 1.0;
    path.events = {{0.3, make_vec({0.8})}, {0.6, make_vec({-0.4})}};
    AveragedField const q = [](Vec const&) { return make_vec({0.0}); };
    auto const out = integrate_averaged(sys, q, make_vec({0.25}), 1.0, path, 1e-2);
    for (auto const& s : out.states)
        ASSERT_EQ(s[0], 0.25);
}

TEST(IntegrateAveraged, LinearJumpFlow)
{
    // K~(v) z = beta v z, so a jump multiplies v by exp(beta z).
    auto const sys = builtin_system("ou_lines");
    LevyPath path;
    path.horizon = 1.0;
    path.events = {{0.5, make_vec({0.8})}};
    AveragedField const q = [](Vec const&) { return make_vec({0.0}); };
    auto const out = integrate_averaged(sys, q, make_vec({0.25}), 1.0, path, 1e-2, 512);
    EXPECT_NEAR(out.states.back()[0], 0.25 * std::exp(0.4), 1e-12);
}

TEST(IntegrateAveraged, TableExtrapolationThrows)
{
    auto const sys = builtin_system("ou_lines");
    QTable const table({{-1.0, 5.0, 0.0, 1.0, 1}, {1.0, 5.0, 0.0, 1.0, 1}});
    LevyPath empty;
    empty.horizon = 1.0;
    EXPECT_THROW(integrate_averaged(sys, table, make_vec({0.0}), 1.0, empty, 1e-3),
                 ExtrapolationError);
    EXPECT_THROW(integrate_averaged(sys, table, make_vec({7.0}), 1.0, empty, 1e-3),
                 PreconditionError);
}

TEST(CoupledError, ZeroPerturbationIsExact)
{
    SystemParams params;
    params.perturbation = PerturbationKind::zero;
    params.transversal_start = 0.5;
    auto const sys = builtin_system("ou_lines", params);
    for (std::uint64_t path = 0; path < 4; ++path)
    {
        auto const s = coupled_error(sys, 0.1, 1.0, *sys.closed_form_Q, 9, path);
        EXPECT_EQ(s.sup_error, 0.0);
        EXPECT_EQ(s.truncation_cause, TruncationCause::horizon);
        EXPECT_EQ(s.truncation_time, 1.0);
    }
}

TEST(CoupledError, ConstantDriftWithoutTransversalJumps)
{
    SystemParams params;
    params.perturbation = PerturbationKind::constant;
    params.kappa = 0.8;
    params.beta = 0.0;
    auto const sys = builtin_system("ou_lines", params);
    for (std::uint64_t path = 0; path < 3; ++path)
        EXPECT_LT(coupled_error(sys, 0.05, 1.0, *sys.closed_form_Q, 2, path).sup_error, 1e-8);
}

TEST(CoupledError, StandardSystemSmoke)
{
    auto const sys = builtin_system("ou_lines");
    auto const a = coupled_error(sys, 0.1, 1.0, *sys.closed_form_Q, 4, 0);
    auto const b = coupled_error(sys, 0.1, 1.0, *sys.closed_form_Q, 4, 0);
    EXPECT_TRUE(std::isfinite(a.sup_error));
    EXPECT_GT(a.sup_error, 0.0);
    EXPECT_LT(a.sup_error, 1.0);
    EXPECT_EQ(a.sup_error, b.sup_error);
    EXPECT_EQ(to_string(a.truncation_cause), "horizon");
}

TEST(CoupledError, Preconditions)
{
    auto const sys = builtin_system("ou_lines");
    EXPECT_THROW(coupled_error(sys, 0.0, 1.0, *sys.closed_form_Q, 1, 0), PreconditionError);
    EXPECT_THROW(coupled_error(sys, 0.1, 1.5, *sys.closed_form_Q, 1, 0), PreconditionError);
    SystemParams params;
    params.transversal_start = 6.0;
    auto const outside = builtin_system("ou_lines", params);
    EXPECT_THROW(coupled_error(outside, 0.1, 1.0, *outside.closed_form_Q, 1, 0),
                 ExitAtStartError);
}

TEST(CoupledError, ExitIsTruncated)
{
    SystemParams params;
    params.perturbation = PerturbationKind::constant;
    params.kappa = 10.0;
    params.beta = 0.0;
    params.region_half_width = 2.0;
    auto const sys = builtin_system("ou_lines", params);
    auto const s = coupled_error(sys, 0.1, 1.0, *sys.closed_form_Q, 1, 0);
    EXPECT_NE(s.truncation_cause, TruncationCause::horizon);
    EXPECT_NEAR(s.truncation_time, 0.2, 1e-3);
}
