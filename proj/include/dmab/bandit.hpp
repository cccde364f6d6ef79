#pragma once
/*
Sample-mean reward estimation and UCB-based allocation.

At time t the rule picks, among the arms available this round,

    argmax_i  Q_i^t = Xhat_i^t + sigma * sqrt(Psi(t) / T_i(t))

where Xhat_i^t is the running sample mean of arm i and Psi is an exploration
schedule (16 log t gives UCB-Normal, the squared normal quantile gives UCL).
*/

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmab/errors.hpp"
#include "dmab/schedule.hpp"

namespace dmab {

using AvailabilityMask = std::vector<std::uint8_t>;

struct ArmStats {
    std::int64_t pulls = 0;  // T_i(t)
    double sum = 0.0;        // S_i^t
    double estimate = 0.0;   // Xhat_i^t
};

// Constants of the sample-mean tail bound
//   P(Xhat >= muhat + sqrt(vartheta / T)) <= nu log t exp(-2 kappa vartheta)
// for rewards in [0, chi].
struct TailConstants {
    double eta = 0.3;
    double chi = 1.0;
    double kappa = 0.0;
    double nu = 0.0;
};

inline TailConstants make_tail_constants(double eta, double chi)
{
    if (!(eta > 0.0 && eta < 4.0)) throw ConfigError("eta must lie in (0, 4)");
    if (!(chi > 0.0) || !std::isfinite(chi)) throw ConfigError("chi must be positive");
    return {eta, chi, (1.0 - eta * eta / 16.0) / (chi * chi), 1.0 / std::log1p(eta)};
}

// Unclamped nu log t / exp(2 kappa vartheta).
inline double tail_bound_raw(const TailConstants& c, Step t, double vartheta)
{
    return c.nu * std::log(static_cast<double>(t)) * std::exp(-2.0 * c.kappa * vartheta);
}

inline double tail_bound(const TailConstants& c, Step t, double vartheta)
{
    if (t < 2) throw std::domain_error("tail_bound needs t >= 2");
    if (!(vartheta > 0.0)) throw std::domain_error("tail_bound needs vartheta > 0");
    return std::clamp(tail_bound_raw(c, t, vartheta), 0.0, 1.0);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

// Wichura's AS 241 (PPND16), about 1e-16 relative accuracy.
inline double as241(double p)
{
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r + 6.7265770927008700853e+4) * r +
                    4.5921953931549871457e+4) * r + 1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r + 3.9307895800092710610e+4) * r +
                    2.1213794301586595867e+4) * r + 5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                   1.27045825245236838258e+0) * r + 3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                   1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                   2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                   7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

} // namespace detail

// Standard normal quantile: AS 241 followed by one Newton step on the
// erfc-based CDF, taken on whichever tail is smaller to avoid cancellation.
inline double inv_norm_cdf(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inv_norm_cdf needs 0 < p < 1");
    double x = detail::as241(p);
    const double density = normal_pdf(x);
    if (density > 0.0) {
        if (p < 0.5)
            x -= (normal_cdf(x) - p) / density;
        else
            x += (0.5 * std::erfc(x / std::numbers::sqrt2) - (1.0 - p)) / density;
    }
    return x;
}

enum class ExplorationKind { ucb_normal, ucl_quantile, generic_log };

struct ExplorationSchedule {
    ExplorationKind kind = ExplorationKind::ucb_normal;
    double alpha = 16.0;  // generic_log: Psi(t) = alpha log t
    double beta = 16.0;   // declared upper envelope, beta >= alpha

    static ExplorationSchedule ucb_normal() { return {ExplorationKind::ucb_normal, 16.0, 16.0}; }
    static ExplorationSchedule ucl_quantile() { return {ExplorationKind::ucl_quantile, 0.0, 0.0}; }
    static ExplorationSchedule generic_log(double alpha, double beta)
    {
        if (!(alpha >= 0.0) || !(beta >= alpha)) throw ConfigError("generic_log needs 0 <= alpha <= beta");
        return {ExplorationKind::generic_log, alpha, beta};
    }
};

inline double psi_eval(const ExplorationSchedule& s, Step t)
{
    if (t < 1) throw std::domain_error("exploration schedule is defined for t >= 1");
    const double lt = std::log(static_cast<double>(t));
    switch (s.kind) {
    case ExplorationKind::ucb_normal: return 16.0 * lt;
    case ExplorationKind::generic_log: return s.alpha * lt;
    case ExplorationKind::ucl_quantile: {
        const double td = static_cast<double>(t);
        const double tail = 1.0 / (std::sqrt(2.0 * std::numbers::pi * std::numbers::e) * td * td);
        const double z = -inv_norm_cdf(tail);  // upper quantile 1 - tail, by symmetry
        return z * z;
    }
    }
    return 0.0;
}

struct LogEnvelope {
    double alpha = 0.0;
    double beta = 0.0;
};

// Constants with alpha log t <= Psi(t) <= beta log t on 2 <= t <= horizon.
inline LogEnvelope log_envelope(const ExplorationSchedule& s, Step horizon)
{
    if (s.kind != ExplorationKind::ucl_quantile) return {s.alpha, s.beta};
    LogEnvelope env{std::numeric_limits<double>::infinity(), 0.0};
    for (Step t = 2; t <= std::max<Step>(2, horizon); ++t) {
        const double r = psi_eval(s, t) / std::log(static_cast<double>(t));
        env.alpha = std::min(env.alpha, r);
        env.beta = std::max(env.beta, r);
    }
    return env;
}

enum class InitMode { sample_each_once, prior_estimates };

// UCB rule over sample-mean estimates. One instance per replication.
class UcbPolicy {
public:
    UcbPolicy(int k, ExplorationSchedule schedule, double sigma, InitMode mode = InitMode::sample_each_once,
              std::vector<double> prior = {})
        : schedule_(schedule), sigma_(sigma), mode_(mode), arms_(static_cast<std::size_t>(k))
    {
        if (k < 1) throw ConfigError("policy needs at least one arm");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
        if (mode == InitMode::prior_estimates) {
            if (prior.size() != arms_.size()) throw ConfigError("prior estimates need one value per arm");
            for (std::size_t i = 0; i < arms_.size(); ++i) arms_[i].estimate = prior[i];
        }
    }

    int arms_count() const { return static_cast<int>(arms_.size()); }
    const std::vector<ArmStats>& arms() const { return arms_; }
    const ArmStats& arm(int i) const { return arms_.at(static_cast<std::size_t>(i)); }
    double sigma() const { return sigma_; }
    const ExplorationSchedule& schedule() const { return schedule_; }

    // Rounds completed so far; Q is evaluated with Psi(max(time, 1)).
    Step time() const { return time_; }
    void set_time(Step t) { time_ = t; }
    void advance() { ++time_; }

    std::int64_t total_pulls() const
    {
        std::int64_t n = 0;
        for (const auto& a : arms_) n += a.pulls;
        return n;
    }

    // Q_i^t. Unpulled arms count as one pull (T_i(1) = 1).
    double index(int i) const
    {
        const auto& a = arm(i);
        const double pulls = static_cast<double>(std::max<std::int64_t>(a.pulls, 1));
        return a.estimate + sigma_ * std::sqrt(psi_eval(schedule_, std::max<Step>(time_, 1)) / pulls);
    }

    // nullopt when no arm is available (the caller records a skipped round).
    std::optional<int> select_arm(std::span<const std::uint8_t> available)
    {
        if (available.size() != arms_.size()) throw ContractViolation("availability mask has wrong length");
        selected_.reset();
        if (mode_ == InitMode::sample_each_once) {
            for (std::size_t i = 0; i < arms_.size(); ++i) {
                if (available[i] && arms_[i].pulls == 0) {
                    selected_ = static_cast<int>(i);
                    return selected_;
                }
            }
        }
        double best_q = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < arms_.size(); ++i) {
            if (!available[i]) continue;
            const double q = index(static_cast<int>(i));
            if (!selected_ || q > best_q) {
                best_q = q;
                selected_ = static_cast<int>(i);
            }
        }
        return selected_;
    }

    void update(int arm, double reward)
    {
        if (!selected_ || *selected_ != arm)
            throw ContractViolation("update for arm " + std::to_string(arm + 1) + " which was not selected this round");
        auto& a = arms_[static_cast<std::size_t>(arm)];
        a.pulls += 1;
        a.sum += reward;
        a.estimate = a.sum / static_cast<double>(a.pulls);
        selected_.reset();
    }

private:
    ExplorationSchedule schedule_;
    double sigma_;
    InitMode mode_;
    std::vector<ArmStats> arms_;
    Step time_ = 0;
    std::optional<int> selected_;
};

} // namespace dmab
