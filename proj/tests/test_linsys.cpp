#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dmab/linsys.hpp"

using namespace dmab;

namespace {

SystemModel hand_model()
{
    SystemModel m;
    m.k = 1;
    m.m = 2;
    Eigen::MatrixXd A(2, 2);
    A << 0.5, 0.2, 0.0, 0.9;
    m.A = MatrixSchedule::constant(A);
    m.B = MatrixSchedule::constant(Eigen::MatrixXd::Ones(2, 1));
    m.process_noise = NoiseSpec::uniform(1.0);
    Eigen::MatrixXd H(1, 2);
    H << 1.0, 0.5;
    m.H = {MatrixSchedule::constant(H)};
    m.g = {ScalarSchedule::constant(2.0)};
    m.gamma = {ScalarSchedule::constant(1.0)};
    m.obs_noise = {NoiseSpec::scaled_uniform({1.0})};
    m.theta0_mean = Eigen::Vector2d(1.0, 2.0);
    m.theta0_cov = Eigen::Vector2d(0.5, 0.1).asDiagonal();
    m.reward_cap = 10.0;
    return m;
}

SystemModel random_periodic_model(int dim, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto rand_matrix = [&](int r, int c) {
        Eigen::MatrixXd x(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) x(i, j) = u(rng);
        return x;
    };
    SystemModel m;
    m.k = 2;
    m.m = dim;
    std::vector<Eigen::MatrixXd> As, Bs;
    for (int p = 0; p < 3; ++p) {
        Eigen::MatrixXd a = rand_matrix(dim, dim);
        As.push_back(0.95 * a / spectral_norm(a));
        Bs.push_back(0.5 * rand_matrix(dim, 2));
    }
    m.A = MatrixSchedule::periodic(As);
    m.B = MatrixSchedule::periodic(Bs);
    m.process_noise = NoiseSpec::scaled_uniform({1.0, 2.0});
    for (int i = 0; i < 2; ++i) {
        m.H.push_back(MatrixSchedule::constant(rand_matrix(1, dim)));
        m.g.push_back(ScalarSchedule::constant(1.0));
        m.gamma.push_back(ScalarSchedule::constant(1.0));
        m.obs_noise.push_back(NoiseSpec::uniform(0.1));
    }
    m.theta0_mean = rand_matrix(dim, 1);
    const Eigen::MatrixXd L = rand_matrix(dim, dim);
    m.theta0_cov = 0.1 * L * L.transpose();
    m.reward_cap = 100.0;
    return m;
}

} // namespace

// Three steps worked out with exact rational arithmetic.
TEST(Moments, HandModelThreeSteps)
{
    const SystemModel m = hand_model();
    const auto path = moment_path(m, 3);
    ASSERT_EQ(path.size(), 4u);
    const MomentState& s = path[3];
    EXPECT_EQ(s.t, 3);
    EXPECT_NEAR(s.mean(0), 0.729, 1e-15);
    EXPECT_NEAR(s.mean(1), 1.458, 1e-15);
    EXPECT_NEAR(s.cov(0, 0), 0.6072329, 1e-14);
    EXPECT_NEAR(s.cov(0, 1), 0.70844913333333333333, 1e-14);
    EXPECT_NEAR(s.cov(1, 0), 0.70844913333333333333, 1e-14);
    EXPECT_NEAR(s.cov(1, 1), 0.87517743333333333333, 1e-14);
    EXPECT_NEAR(expected_reward(m, 0, s), 1.458, 1e-14);
    EXPECT_NEAR(reward_cov(m, 0, s), 1.867809725, 1e-13);
}

TEST(Moments, CovarianceStaysSymmetricPsd)
{
    const SystemModel m = random_periodic_model(6, 3);
    for (const auto& s : moment_path(m, 200)) {
        ASSERT_EQ(s.cov, s.cov.transpose()) << s.t;
        ASSERT_TRUE(is_symmetric_psd(s.cov)) << s.t;
    }
}

TEST(Moments, ClosedFormMatchesRecursion)
{
    for (std::uint64_t seed : {1, 2, 3}) {
        const SystemModel m = random_periodic_model(6, seed);
        const auto path = moment_path(m, 60);
        for (Step t : {1, 2, 7, 50, 60}) {
            const Eigen::MatrixXd c = closed_form_cov(m, t);
            const double rel = (c - path[static_cast<std::size_t>(t)].cov).norm() / c.norm();
            EXPECT_LT(rel, 1e-8) << "seed " << seed << " t " << t;
        }
    }
}

TEST(Moments, TransitionMatrixPutsLatestFactorLeft)
{
    Eigen::MatrixXd P(2, 2), Q(2, 2);
    P << 1, 1, 0, 1;
    Q << 1, 0, 1, 1;
    SystemModel m = hand_model();
    m.A = MatrixSchedule::periodic({P, Q});
    EXPECT_EQ(transition_matrix(m, 1, 2), Q * P);
    EXPECT_EQ(transition_matrix(m, 1, 3), P * Q * P);
    EXPECT_EQ(transition_matrix(m, 3, 2), Eigen::MatrixXd::Identity(2, 2));
    EXPECT_THROW(transition_matrix(m, 0, 2), ConfigError);
}

TEST(Moments, StaticModelKeepsMeanAndZeroCovariance)
{
    SystemModel m = hand_model();
    m.A = MatrixSchedule::constant(Eigen::MatrixXd::Identity(2, 2));
    m.B = MatrixSchedule::zero(2, 1);
    m.process_noise = NoiseSpec::zero(1);
    m.theta0_cov.setZero();
    for (const auto& s : moment_path(m, 20)) {
        EXPECT_EQ(s.mean, m.theta0_mean);
        EXPECT_TRUE(s.cov.isZero(0.0));
    }
}

TEST(Moments, GrowthBoundHoldsForContraction)
{
    SystemModel m = hand_model();
    m.process_noise = NoiseSpec::uniform(3.0);  // ||Sigma_theta|| = 3 >= 1
    const auto path = moment_path(m, 100);
    double a = 0.0;
    for (Step t = 1; t <= 100; ++t)
        for (Step tau = 1; tau <= t + 1; ++tau) a = std::max(a, spectral_norm(transition_matrix(m, tau, t)));
    for (Step t = 1; t <= 100; ++t)
        EXPECT_LE(spectral_norm(path[static_cast<std::size_t>(t)].cov), covariance_growth_bound(m, a, t)) << t;
}

TEST(Linear, SpectralNormOfKnownMatrix)
{
    Eigen::MatrixXd M(2, 2);
    M << 3, 0, 4, 5;
    EXPECT_NEAR(spectral_norm(M), std::sqrt(45.0), 1e-12);
    EXPECT_NEAR(spectral_norm(Eigen::MatrixXd::Ones(1, 4)), 2.0, 1e-12);
    EXPECT_EQ(spectral_norm(Eigen::MatrixXd::Zero(3, 2)), 0.0);
}

TEST(Linear, PsdCheck)
{
    Eigen::MatrixXd M(2, 2);
    M << 1, 2, 2, 1;
    EXPECT_FALSE(is_symmetric_psd(M));
    M << 2, 1, 1, 2;
    EXPECT_TRUE(is_symmetric_psd(M));
    M << 2, 1, 0, 2;
    EXPECT_FALSE(is_symmetric_psd(M));
}

TEST(Rewards, UnavailableArmEmitsExactZeroWithoutDrawing)
{
    SystemModel m = hand_model();
    m.gamma = {ScalarSchedule::periodic({1.0, 0.0})};
    Stream rng = derive_stream({1, 0, StreamRole::obs_noise, 0});
    Stream copy = rng;
    const Eigen::VectorXd theta = m.theta0_mean;
    EXPECT_EQ(emit_reward(m, theta, 0, 2, rng), 0.0);
    EXPECT_EQ(rng(), copy());
    const double x = emit_reward(m, theta, 0, 1, rng);
    EXPECT_NEAR(x, 2.0, 2.0 * 0.5 + 1e-12);
    EXPECT_FALSE(available(m, 0, 2));
    EXPECT_TRUE(available(m, 0, 3));
    const auto path = moment_path(m, 2);
    EXPECT_EQ(expected_reward(m, 0, path[2]), 0.0);
    EXPECT_NE(unmasked_expected_reward(m, 0, path[2]), 0.0);
    EXPECT_EQ(reward_cov(m, 0, path[2]), 0.0);
}

TEST(Rewards, StateStepUsesScheduleAtT)
{
    SystemModel m = hand_model();
    m.process_noise = NoiseSpec::zero(1);
    Stream rng = derive_stream({1, 0, StreamRole::process_noise, 0});
    const Eigen::VectorXd next = step_state(m, m.theta0_mean, 1, rng);
    EXPECT_NEAR(next(0), 0.9, 1e-15);
    EXPECT_NEAR(next(1), 1.8, 1e-15);
    EXPECT_THROW(step_state(m, m.theta0_mean, 0, rng), ConfigError);
}

TEST(Validation, RejectsBadModels)
{
    EXPECT_NO_THROW(validate(hand_model(), 10));

    SystemModel m = hand_model();
    m.H = {MatrixSchedule::constant(Eigen::MatrixXd::Ones(1, 3))};
    EXPECT_THROW(validate(m, 10), ConfigError);

    m = hand_model();
    m.g = {ScalarSchedule::constant(0.0)};
    EXPECT_THROW(validate(m, 10), ConfigError);

    m = hand_model();
    m.gamma = {ScalarSchedule::constant(0.5)};
    EXPECT_THROW(validate(m, 10), ConfigError);

    m = hand_model();
    m.A = MatrixSchedule::table({Eigen::MatrixXd::Identity(2, 2)});
    EXPECT_THROW(validate(m, 2), ConfigError);
    EXPECT_NO_THROW(validate(m, 1));

    m = hand_model();
    m.theta0_cov(0, 1) = 1.0;
    EXPECT_THROW(validate(m, 10), ConfigError);

    m = hand_model();
    m.process_noise = NoiseSpec::uniform(1.0, 2);
    EXPECT_THROW(validate(m, 10), ConfigError);
}
