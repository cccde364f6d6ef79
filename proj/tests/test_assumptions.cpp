#include <cmath>

#include <gtest/gtest.h>

#include "dmab/assumptions.hpp"
#include "dmab/scenarios.hpp"

using namespace dmab;

TEST(Certificate, ParkDefaults)
{
    const auto c = certify(build_park({}), 200);
    EXPECT_TRUE(c.passed());
    ASSERT_TRUE(c.optimal_arm.has_value());
    EXPECT_EQ(*c.optimal_arm, 3);
    // A is a permutation, so every transition matrix has unit norm.
    EXPECT_NEAR(c.a_lower, 1.0, 1e-12);
    EXPECT_NEAR(c.a_upper, 1.0, 1e-12);
    EXPECT_EQ(c.sigma_bound, 0.0);
    EXPECT_NEAR(c.reward_var_bound, 2500.0 / 3.0, 1e-9);
    // min_t gaps: 0.75 * (1000 - theta_bar_i); max gap: (4/3)(1000 - 350).
    const std::vector<double> expect{450.0, 487.5, 187.5, 0.0, 355.5};
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(c.delta_lower[i], expect[i], 1e-9) << i;
    EXPECT_NEAR(c.delta_upper, 2600.0 / 3.0, 1e-9);
    // First zero at t = 3: 1 / log 3.
    EXPECT_NEAR(c.availability_gamma, 0.91023922662683739361, 1e-14);
    EXPECT_TRUE(c.availability_ok);
    EXPECT_EQ(c.unavailability_counts.back(), 4);
    EXPECT_EQ(c.last_nonzero_b, 0);
    EXPECT_TRUE(c.messages.empty());
}

TEST(Certificate, ParkWithProcessNoiseFailsBDecay)
{
    ParkScenario sc;
    sc.process_noise = true;
    const auto c = certify(build_park(sc), 200);
    EXPECT_FALSE(c.b_decay_ok);
    EXPECT_FALSE(c.passed());
    EXPECT_EQ(c.last_nonzero_b, 200);
    EXPECT_NEAR(c.b_fit, 200.0 * std::sqrt(3.0), 1e-9);
    // Each arm's common perturbation accumulates: Var after t steps = t * 2500 / 3.
    EXPECT_NEAR(c.sigma_bound, 3.0 * 200.0 * 2500.0 / 3.0, 1e-6);
    EXPECT_NEAR(c.reward_var_bound, 201.0 * 2500.0 / 3.0, 1e-6);
    EXPECT_TRUE(c.growth_bound_holds);
    ASSERT_TRUE(c.optimal_arm.has_value());
    EXPECT_EQ(*c.optimal_arm, 3);
}

TEST(Certificate, EqualMeansHaveNoUniqueOptimum)
{
    const auto c = certify(build_static({0.5, 0.5}, {0.1, 0.1}), 50);
    EXPECT_FALSE(c.optimal_arm.has_value());
    EXPECT_FALSE(c.passed());
    EXPECT_NE(std::find(c.messages.begin(), c.messages.end(), "no unique optimal arm"), c.messages.end());
}

TEST(Certificate, StaticTwoArm)
{
    const auto c = certify(build_static({0.9, 0.5}, {0.1, 0.1}), 100);
    EXPECT_TRUE(c.passed());
    EXPECT_EQ(*c.optimal_arm, 0);
    EXPECT_NEAR(c.delta_lower[1], 0.4, 1e-12);
    EXPECT_NEAR(c.delta_upper, 0.4, 1e-12);
    EXPECT_EQ(c.availability_gamma, 0.0);
}

TEST(Certificate, ValueViolationsAreFlagsNotErrors)
{
    SystemModel m = build_static({0.9, 0.5}, {0.1, 0.1});
    m.g[1] = ScalarSchedule::constant(-1.0);
    m.gamma[1] = ScalarSchedule::constant(0.5);
    AssumptionCertificate c;
    ASSERT_NO_THROW(c = certify(m, 20));
    EXPECT_FALSE(c.g_ok);
    EXPECT_FALSE(c.availability_binary_ok);
    EXPECT_FALSE(c.passed());
}

TEST(Certificate, ReportsRoundsWithNoArm)
{
    SystemModel m = build_static({0.9, 0.5}, {0.1, 0.1});
    m.gamma[0] = ScalarSchedule::periodic({1, 1, 1, 0});
    m.gamma[1] = ScalarSchedule::periodic({1, 0, 1, 0});
    const auto c = certify(m, 8);
    EXPECT_NE(std::find(c.messages.begin(), c.messages.end(), "t = 4: no arm available"), c.messages.end());
    EXPECT_NE(std::find(c.messages.begin(), c.messages.end(), "t = 8: no arm available"), c.messages.end());
}

TEST(Certificate, ShortHorizonRejected) { EXPECT_THROW(certify(build_static({1.0}, {0.0}), 1), ConfigError); }

TEST(AvailabilityBudget, AlwaysAvailable)
{
    const auto b = availability_budget(ScalarSchedule::constant(1.0), 100);
    EXPECT_EQ(b.worst_gamma, 0.0);
    EXPECT_TRUE(b.logarithmic);
}

TEST(AvailabilityBudget, LinearUnavailabilityIsNotLogarithmic)
{
    const auto b = availability_budget(ScalarSchedule::periodic({1.0, 0.0}), 400);
    EXPECT_FALSE(b.logarithmic);
    EXPECT_NEAR(b.worst_gamma, 200.0 / std::log(400.0), 1e-12);
}

TEST(AvailabilityBudget, ParkScheduleIsDominated)
{
    const auto b = availability_budget(ScalarSchedule::log_unavailable(1), 200);
    for (Step t = 2; t <= 200; ++t)
        EXPECT_LE(static_cast<double>(b.counts[static_cast<std::size_t>(t)]),
                  b.worst_gamma * std::log(static_cast<double>(t)) * (1.0 + 1e-12));
    EXPECT_TRUE(b.logarithmic);
}

TEST(GapProfile, LeaderPerStep)
{
    ParkScenario sc;
    sc.alpha = {1.0, 1.0, 1.0};
    const auto gp = gap_profile(build_park(sc), 9);
    for (Step t = 1; t <= 9; ++t) EXPECT_EQ(gp.leader[static_cast<std::size_t>(t)], 3);
    EXPECT_NEAR(gp.gaps[0][5], 600.0, 1e-12);
    EXPECT_EQ(fixed_optimal_arm(gp), 3);
}
