#pragma once
/*
Finite-horizon certification of the boundedness and identifiability
conditions under which UCB-type rules have logarithmic regret, and extraction
of the constants (a, a_bar, sigma, g_bar_i, h_i, h_bar_i, b, Delta_i,
Delta_bar, gamma, i*) that parameterize the regret bound.

All extremal constants are computed by exhaustive evaluation over
t = 1..horizon. Nothing here proves an infinite-horizon statement.
*/

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmab/linsys.hpp"

namespace dmab {

inline constexpr double kOptimalTieTolerance = 1e-9;

struct AvailabilityBudget {
    double worst_gamma = 0.0;
    // counts[t] = #{2 <= j <= t : gamma^j == 0}, for t = 0..horizon.
    std::vector<std::int64_t> counts;
    // False when the unavailability count is still outgrowing log t over the
    // second half of the horizon (e.g. linear growth).
    bool logarithmic = true;
};

// Smallest gamma with count(t) <= gamma log t for all 2 <= t <= horizon.
inline AvailabilityBudget availability_budget(const ScalarSchedule& schedule, Step horizon)
{
    if (horizon < 2) throw ConfigError("availability_budget needs horizon >= 2");
    AvailabilityBudget out;
    out.counts.assign(static_cast<std::size_t>(horizon) + 1, 0);
    std::vector<double> ratio(static_cast<std::size_t>(horizon) + 1, 0.0);
    for (Step t = 2; t <= horizon; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        out.counts[ti] = out.counts[ti - 1] + (schedule.eval(t) == 0.0 ? 1 : 0);
        ratio[ti] = static_cast<double>(out.counts[ti]) / std::log(static_cast<double>(t));
        out.worst_gamma = std::max(out.worst_gamma, ratio[ti]);
    }
    const Step mid = std::max<Step>(2, (horizon + 1) / 2);
    double first = 0.0;
    double second = 0.0;
    for (Step t = 2; t <= horizon; ++t) {
        double& side = t < mid ? first : second;
        side = std::max(side, ratio[static_cast<std::size_t>(t)]);
    }
    const auto late_zeros = out.counts[static_cast<std::size_t>(horizon)] - out.counts[static_cast<std::size_t>(mid)];
    out.logarithmic = second <= first * (1.0 + 1e-12) || late_zeros <= 1;
    return out;
}

struct GapProfile {
    // Per-step argmax of H_i^t E(theta^t); nullopt where the top two are
    // within kOptimalTieTolerance. Index 0 is unused (t starts at 1).
    std::vector<std::optional<int>> leader;
    // gaps[i][t] = max_j H_j^t E(theta^t) - H_i^t E(theta^t).
    std::vector<std::vector<double>> gaps;
};

inline GapProfile gap_profile(const SystemModel& model, const std::vector<MomentState>& path)
{
    const Step horizon = static_cast<Step>(path.size()) - 1;
    GapProfile out;
    out.leader.assign(path.size(), std::nullopt);
    out.gaps.assign(static_cast<std::size_t>(model.k), std::vector<double>(path.size(), 0.0));
    std::vector<double> value(static_cast<std::size_t>(model.k));
    for (Step t = 1; t <= horizon; ++t) {
        const auto& st = path[static_cast<std::size_t>(t)];
        int best = 0;
        for (int i = 0; i < model.k; ++i) {
            value[static_cast<std::size_t>(i)] = unmasked_expected_reward(model, i, st);
            if (value[static_cast<std::size_t>(i)] > value[static_cast<std::size_t>(best)]) best = i;
        }
        const double top = value[static_cast<std::size_t>(best)];
        bool tie = false;
        for (int i = 0; i < model.k; ++i) {
            out.gaps[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = top - value[static_cast<std::size_t>(i)];
            if (i != best && top - value[static_cast<std::size_t>(i)] <= kOptimalTieTolerance) tie = true;
        }
        if (!tie) out.leader[static_cast<std::size_t>(t)] = best;
    }
    return out;
}

inline GapProfile gap_profile(const SystemModel& model, Step horizon)
{
    return gap_profile(model, moment_path(model, horizon));
}

// The arm that leads (strictly) at every step of the horizon, if any.
inline std::optional<int> fixed_optimal_arm(const GapProfile& profile)
{
    std::optional<int> arm;
    for (std::size_t t = 1; t < profile.leader.size(); ++t) {
        if (!profile.leader[t]) return std::nullopt;
        if (arm && *arm != *profile.leader[t]) return std::nullopt;
        arm = profile.leader[t];
    }
    return arm;
}

struct AssumptionCertificate {
    Step horizon = 0;

    // ||Phi^t_tau|| over 1 <= tau <= t <= horizon.
    double a_lower = 0.0;
    double a_upper = 0.0;
    bool transition_ok = false;

    double sigma_bound = 0.0;        // max_t ||Sigma(theta^t)||
    double reward_var_bound = 0.0;   // max_{i,t} Sigma(X_i^t)
    bool sigma_ok = false;
    bool growth_bound_holds = false; // covariance_growth_bound at every t (informational)

    bool availability_binary_ok = false;
    std::vector<double> g_upper;
    bool g_ok = false;

    double b_fit = 0.0;              // max_t t ||B^t||
    Step last_nonzero_b = 0;         // 0 when B vanishes on the whole horizon
    bool b_decay_ok = false;

    std::vector<double> h_lower;
    std::vector<double> h_upper;
    bool h_ok = false;

    std::optional<int> optimal_arm;  // 0-based
    std::vector<double> delta_lower; // per arm; 0 for the optimal arm
    double delta_upper = 0.0;
    bool gap_ok = false;

    double availability_gamma = 0.0;
    bool availability_ok = false;
    std::vector<std::int64_t> unavailability_counts;

    std::vector<std::string> messages;

    bool passed() const
    {
        return transition_ok && sigma_ok && availability_binary_ok && g_ok && b_decay_ok && h_ok &&
               optimal_arm.has_value() && gap_ok && availability_ok;
    }
};

inline AssumptionCertificate certify(const SystemModel& model, Step horizon)
{
    if (horizon < 2) throw ConfigError("certify needs horizon >= 2");
    validate_structure(model, horizon);

    AssumptionCertificate c;
    c.horizon = horizon;
    const auto k = static_cast<std::size_t>(model.k);
    const auto path = moment_path(model, horizon);

    c.a_lower = std::numeric_limits<double>::infinity();
    for (Step tau = 1; tau <= horizon; ++tau) {
        Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(model.m, model.m);
        for (Step t = tau; t <= horizon; ++t) {
            phi = model.A.eval(t) * phi;
            const double n = spectral_norm(phi);
            c.a_lower = std::min(c.a_lower, n);
            c.a_upper = std::max(c.a_upper, n);
        }
    }
    c.transition_ok = c.a_lower > 0.0 && std::isfinite(c.a_upper);
    if (!c.transition_ok) c.messages.emplace_back("transition matrix norms not bounded away from 0 and infinity");

    c.growth_bound_holds = true;
    const double a2 = c.a_upper * c.a_upper;
    const double noise_norm = spectral_norm(model.process_noise.covariance());
    const double init_term = a2 * spectral_norm(model.theta0_cov);
    double b_sum = 0.0;
    for (Step t = 1; t <= horizon; ++t) {
        const auto& st = path[static_cast<std::size_t>(t)];
        const double n = spectral_norm(st.cov);
        const double nb = spectral_norm(model.B.eval(t));
        b_sum += nb * nb;
        c.sigma_bound = std::max(c.sigma_bound, n);
        if (n > (init_term + a2 * noise_norm * noise_norm * b_sum) * (1.0 + 1e-9) + 1e-9) c.growth_bound_holds = false;
        for (int i = 0; i < model.k; ++i) c.reward_var_bound = std::max(c.reward_var_bound, reward_cov(model, i, st));
    }
    c.sigma_ok = std::isfinite(c.sigma_bound);

    c.availability_binary_ok = true;
    c.g_ok = true;
    c.h_ok = true;
    c.g_upper.assign(k, 0.0);
    c.h_lower.assign(k, std::numeric_limits<double>::infinity());
    c.h_upper.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (Step t = 1; t <= horizon; ++t) {
            const double gm = model.gamma[i].eval(t);
            if (gm != 0.0 && gm != 1.0) {
                if (c.availability_binary_ok)
                    c.messages.push_back("arm " + std::to_string(i + 1) + ": availability not in {0, 1}");
                c.availability_binary_ok = false;
            }
            const double g = model.g[i].eval(t);
            if (!(g > 0.0)) c.g_ok = false;
            c.g_upper[i] = std::max(c.g_upper[i], g);
            const double h = spectral_norm(model.H[i].eval(t));
            c.h_lower[i] = std::min(c.h_lower[i], h);
            c.h_upper[i] = std::max(c.h_upper[i], h);
        }
        if (!(c.h_lower[i] > 0.0)) c.h_ok = false;
    }
    if (!c.g_ok) c.messages.emplace_back("some g_i^t is not positive");
    if (!c.h_ok) c.messages.emplace_back("some H_i^t vanishes");

    for (Step t = 1; t <= horizon; ++t) {
        bool any = false;
        for (int i = 0; i < model.k; ++i) any = any || available(model, i, t);
        if (!any) c.messages.push_back("t = " + std::to_string(t) + ": no arm available");
    }

    // ||B^t|| <= b / t is judged by whether t ||B^t|| keeps growing in the
    // second half of the horizon; B vanishing after some step passes too.
    double first = 0.0;
    double second = 0.0;
    const Step mid = std::max<Step>(1, horizon / 2);
    for (Step t = 1; t <= horizon; ++t) {
        const double nb = spectral_norm(model.B.eval(t));
        const double scaled = static_cast<double>(t) * nb;
        if (nb > 0.0) c.last_nonzero_b = t;
        c.b_fit = std::max(c.b_fit, scaled);
        double& side = t <= mid ? first : second;
        side = std::max(side, scaled);
    }
    c.b_decay_ok = second <= first * (1.0 + 1e-9);
    if (!c.b_decay_ok) c.messages.emplace_back("||B^t|| does not decay like 1/t over the horizon");

    const GapProfile gp = gap_profile(model, path);
    c.optimal_arm = fixed_optimal_arm(gp);
    c.delta_lower.assign(k, 0.0);
    if (!c.optimal_arm) {
        c.messages.emplace_back("no unique optimal arm");
    } else {
        c.gap_ok = true;
        for (std::size_t i = 0; i < k; ++i) {
            if (static_cast<int>(i) == *c.optimal_arm) continue;
            double lo = std::numeric_limits<double>::infinity();
            for (Step t = 1; t <= horizon; ++t) {
                const double d = gp.gaps[i][static_cast<std::size_t>(t)];
                lo = std::min(lo, d);
                c.delta_upper = std::max(c.delta_upper, d);
            }
            c.delta_lower[i] = lo;
            if (!(lo > 0.0)) c.gap_ok = false;
        }
        const AvailabilityBudget budget = availability_budget(model.gamma[static_cast<std::size_t>(*c.optimal_arm)], horizon);
        c.availability_gamma = budget.worst_gamma;
        c.availability_ok = budget.logarithmic;
        c.unavailability_counts = budget.counts;
        if (!c.availability_ok) c.messages.emplace_back("optimal arm unavailable more than logarithmically often");
    }
    return c;
}

} // namespace dmab
