#pragma once
/*
Canonical experiment models.

Park: k independent options, each a 3-state block cycled by the shift
[[0,1,0],[0,0,1],[1,0,0]], so the expected reward of option i runs through
theta_bar_i * (alpha_1, alpha_2, alpha_3) with period 3. The optimal option
goes unavailable on a logarithmically thinning schedule.

Static: A = I, B = 0, every arm always available; a stationary bandit.
*/

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmab/errors.hpp"
#include "dmab/linsys.hpp"

namespace dmab {

struct ParkScenario {
    std::vector<double> theta_bar{400.0, 350.0, 750.0, 1000.0, 526.0};
    std::vector<double> alpha{0.75, 1.0, 4.0 / 3.0};
    bool process_noise = false;
    double process_half_width = 50.0;
    double obs_half_width = 50.0;
    int unavailable_arm = 3;          // 0-based; -1 keeps every arm available
    std::int64_t offset = 1;          // n_i of the unavailability schedule
    double reward_cap = 1400.0;

    friend bool operator==(const ParkScenario&, const ParkScenario&) = default;
};

inline constexpr int kParkBlock = 3;

inline Eigen::Matrix3d cyclic_shift()
{
    Eigen::Matrix3d a;
    a << 0, 1, 0,
         0, 0, 1,
         1, 0, 0;
    return a;
}

// gamma^t for t = 1..horizon (true = available).
inline std::vector<bool> unavailability_schedule(std::int64_t offset, Step horizon)
{
    if (offset < 0) throw ConfigError("unavailability offset must be >= 0");
    std::vector<bool> out;
    out.reserve(static_cast<std::size_t>(std::max<Step>(horizon, 0)));
    for (Step t = 1; t <= horizon; ++t) out.push_back(log_schedule_available(offset, t));
    return out;
}

inline SystemModel build_park(const ParkScenario& sc)
{
    const int k = static_cast<int>(sc.theta_bar.size());
    if (k < 1) throw ConfigError("park scenario needs at least one option");
    if (sc.alpha.size() != kParkBlock) throw ConfigError("park scenario needs exactly three alpha values");
    const double prod = sc.alpha[0] * sc.alpha[1] * sc.alpha[2];
    if (std::abs(prod - 1.0) > 1e-12) throw ConfigError("alpha_1 alpha_2 alpha_3 must equal 1");
    for (double a : sc.alpha)
        if (!(a > 0.0)) throw ConfigError("alpha values must be positive");
    if (sc.unavailable_arm < -1 || sc.unavailable_arm >= k) throw ConfigError("unavailable_arm out of range");

    const int m = kParkBlock * k;
    SystemModel model;
    model.k = k;
    model.m = m;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < k; ++i) A.block<kParkBlock, kParkBlock>(kParkBlock * i, kParkBlock * i) = cyclic_shift();
    model.A = MatrixSchedule::constant(A);

    if (sc.process_noise) {
        // One common perturbation per option, shared by its three states.
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, k);
        for (int i = 0; i < k; ++i) B.block<kParkBlock, 1>(kParkBlock * i, i).setOnes();
        model.B = MatrixSchedule::constant(B);
        model.process_noise = NoiseSpec::uniform(sc.process_half_width, k);
    } else {
        model.B = MatrixSchedule::zero(m, k);
        model.process_noise = NoiseSpec::zero(k);
    }

    model.theta0_mean = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < k; ++i) {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, m);
        H(0, kParkBlock * i) = 1.0;
        model.H.push_back(MatrixSchedule::constant(H));
        model.g.push_back(ScalarSchedule::constant(1.0));
        model.gamma.push_back(i == sc.unavailable_arm ? ScalarSchedule::log_unavailable(sc.offset)
                                                      : ScalarSchedule::constant(1.0));
        model.obs_noise.push_back(NoiseSpec::uniform(sc.obs_half_width));
        for (int j = 0; j < kParkBlock; ++j)
            model.theta0_mean(kParkBlock * i + j) = sc.theta_bar[static_cast<std::size_t>(i)] * sc.alpha[static_cast<std::size_t>(j)];
    }
    model.theta0_cov = Eigen::MatrixXd::Zero(m, m);
    model.reward_cap = sc.reward_cap;
    return model;
}

// Stationary bandit: arm i has constant mean means[i] plus U(-c_i, c_i) noise.
inline SystemModel build_static(const std::vector<double>& means, const std::vector<double>& half_widths,
                                double reward_cap = 0.0)
{
    const int k = static_cast<int>(means.size());
    if (k < 1) throw ConfigError("static scenario needs at least one arm");
    if (half_widths.size() != means.size()) throw ConfigError("static scenario needs one noise half-width per arm");
    double cap = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (!(means[i] >= 0.0)) throw ConfigError("static scenario means must be nonnegative");
        cap = std::max(cap, means[i] + half_widths[i]);
    }
    SystemModel model;
    model.k = k;
    model.m = k;
    model.A = MatrixSchedule::constant(Eigen::MatrixXd::Identity(k, k));
    model.B = MatrixSchedule::zero(k, 1);
    model.process_noise = NoiseSpec::zero(1);
    model.theta0_mean = Eigen::Map<const Eigen::VectorXd>(means.data(), k);
    model.theta0_cov = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, k);
        H(0, i) = 1.0;
        model.H.push_back(MatrixSchedule::constant(H));
        model.g.push_back(ScalarSchedule::constant(1.0));
        model.gamma.push_back(ScalarSchedule::constant(1.0));
        model.obs_noise.push_back(NoiseSpec::uniform(half_widths[static_cast<std::size_t>(i)]));
    }
    model.reward_cap = reward_cap > 0.0 ? reward_cap : (cap > 0.0 ? cap : 1.0);
    return model;
}

} // namespace dmab
