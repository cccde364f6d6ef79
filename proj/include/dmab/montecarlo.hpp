#pragma once
/*
Episode simulation, replication aggregation, the reference regret bound, and
empirical verification of the estimator tail bound.

Regret is pseudo-regret: each round contributes
    E(X^t_{i*_t}) - gamma^t_{phi_t} E(X^t_{phi_t}),
with i*_t the best *available* arm under the propagated (true) means.
Replications run on a worker pool but every replication owns its streams and
results are reduced in replication order, so outputs do not depend on the
number of workers.
*/

#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "dmab/assumptions.hpp"
#include "dmab/bandit.hpp"
#include "dmab/linsys.hpp"
#include "dmab/noise.hpp"
#include "dmab/stats.hpp"

namespace dmab {

template <class P>
concept AllocationPolicy = requires(P p, std::span<const std::uint8_t> mask, int arm, double r) {
    { p.select_arm(mask) } -> std::convertible_to<std::optional<int>>;
    p.update(arm, r);
    p.advance();
};

struct EpisodeStreams {
    Stream process;
    std::vector<Stream> obs;  // one per arm
    Stream selection;

    static EpisodeStreams derive(std::uint64_t seed, std::uint64_t replication, int k)
    {
        EpisodeStreams s{derive_stream({seed, replication, StreamRole::process_noise, 0}), {},
                         derive_stream({seed, replication, StreamRole::tie_break, 0})};
        s.obs.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i)
            s.obs.push_back(derive_stream({seed, replication, StreamRole::obs_noise, static_cast<std::uint32_t>(i)}));
        return s;
    }
};

// theta^0 = E(theta^0) + L u, L L^T = Sigma(theta^0), u with independent
// U(-sqrt 3, sqrt 3) components (unit variance, bounded).
inline Eigen::VectorXd sample_initial_state(const SystemModel& model, Stream& rng)
{
    if (model.theta0_cov.isZero(0.0)) return model.theta0_mean;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.theta0_cov);
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::VectorXd u(model.m);
    for (int j = 0; j < model.m; ++j) u(j) = std::sqrt(3.0) * uniform_pm1(rng);
    return model.theta0_mean + es.eigenvectors() * root.asDiagonal() * u;
}

struct StepRecord {
    Step t = 0;
    std::optional<int> arm;  // nullopt on a skipped round
    double reward = 0.0;
    AvailabilityMask available;
    double expected = 0.0;   // gamma E(X) of the chosen arm
    double regret = 0.0;
};

struct RunLedger {
    std::vector<StepRecord> steps;
    std::vector<std::int64_t> pulls;      // T_i(n) at the end
    std::vector<double> cum_reward;       // S_n, index n - 1
    std::vector<double> cum_regret;       // R_n, index n - 1
    std::vector<std::int64_t> opt_pulls;  // T_{i*}(n), index n - 1
    std::int64_t skipped = 0;
    std::int64_t support_violations = 0;
};

// `path` holds the propagated moments for t = 0..horizon; `optimal_arm` is the
// arm whose pull count is tracked as T_{i*}(n).
template <AllocationPolicy Policy>
RunLedger run_episode(const SystemModel& model, const std::vector<MomentState>& path, Policy& policy, Step horizon,
                      int optimal_arm, EpisodeStreams& streams)
{
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (static_cast<Step>(path.size()) <= horizon) throw ConfigError("moment path shorter than horizon");
    const auto k = static_cast<std::size_t>(model.k);
    RunLedger ledger;
    ledger.steps.reserve(static_cast<std::size_t>(horizon));
    ledger.pulls.assign(k, 0);
    ledger.cum_reward.reserve(static_cast<std::size_t>(horizon));
    ledger.cum_regret.reserve(static_cast<std::size_t>(horizon));
    ledger.opt_pulls.reserve(static_cast<std::size_t>(horizon));

    Eigen::VectorXd theta = sample_initial_state(model, streams.process);
    std::vector<double> expected(k);
    double S = 0.0;
    double R = 0.0;
    for (Step t = 1; t <= horizon; ++t) {
        theta = step_state(model, theta, t, streams.process);
        const MomentState& moments = path[static_cast<std::size_t>(t)];
        StepRecord rec;
        rec.t = t;
        rec.available.assign(k, 0);
        std::optional<double> best;
        for (std::size_t i = 0; i < k; ++i) {
            rec.available[i] = available(model, static_cast<int>(i), t) ? 1 : 0;
            expected[i] = expected_reward(model, static_cast<int>(i), moments);
            if (rec.available[i] && (!best || expected[i] > *best)) best = expected[i];
        }
        rec.arm = policy.select_arm(std::span<const std::uint8_t>(rec.available));
        if (rec.arm) {
            const int arm = *rec.arm;
            if (arm < 0 || arm >= model.k || !rec.available[static_cast<std::size_t>(arm)])
                throw ContractViolation("policy chose unavailable arm " + std::to_string(arm + 1) + " at t = " +
                                        std::to_string(t));
            rec.reward = emit_reward(model, theta, arm, t, streams.obs[static_cast<std::size_t>(arm)]);
            if (rec.reward < 0.0 || rec.reward > model.reward_cap) ++ledger.support_violations;
            policy.update(arm, rec.reward);
            ++ledger.pulls[static_cast<std::size_t>(arm)];
            rec.expected = expected[static_cast<std::size_t>(arm)];
            rec.regret = *best - rec.expected;
        } else {
            if (best) throw ContractViolation("policy skipped a round with an available arm at t = " + std::to_string(t));
            ++ledger.skipped;
        }
        policy.advance();
        S += rec.expected;
        R += rec.regret;
        ledger.cum_reward.push_back(S);
        ledger.cum_regret.push_back(R);
        ledger.opt_pulls.push_back(optimal_arm >= 0 ? ledger.pulls[static_cast<std::size_t>(optimal_arm)] : 0);
        ledger.steps.push_back(std::move(rec));
    }
    return ledger;
}

// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
// exception thrown by any task is rethrown after all threads have joined.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn)
{
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(count);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Arm tracked as i*: the certified optimal arm when unique, otherwise the arm
// with the largest expected reward summed over the horizon.
inline int tracked_optimal_arm(const SystemModel& model, const std::vector<MomentState>& path)
{
    if (auto arm = fixed_optimal_arm(gap_profile(model, path))) return *arm;
    int best = 0;
    double best_total = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < model.k; ++i) {
        double total = 0.0;
        for (std::size_t t = 1; t < path.size(); ++t) total += unmasked_expected_reward(model, i, path[t]);
        if (total > best_total) {
            best_total = total;
            best = i;
        }
    }
    return best;
}

struct AggregateOptions {
    Step horizon = 200;
    std::int64_t replications = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

struct AggregateRow {
    Step n = 0;
    MeanSe S;
    MeanSe R;
    MeanSe Topt;
};

struct AggregateResult {
    std::vector<AggregateRow> rows;  // n = 1..horizon
    std::int64_t replications = 0;
    std::uint64_t seed = 0;
    int optimal_arm = 0;
    std::int64_t support_violations = 0;
    std::int64_t skipped_rounds = 0;
    std::vector<double> mean_pulls;  // E(T_i(horizon)) per arm
};

// make_policy(replication) builds a fresh policy for each replication.
template <class MakePolicy>
AggregateResult aggregate(const SystemModel& model, MakePolicy&& make_policy, const AggregateOptions& opt)
{
    if (opt.replications < 1) throw ConfigError("replications must be >= 1");
    if (opt.horizon < 1) throw ConfigError("horizon must be >= 1");
    validate(model, opt.horizon);
    const auto path = moment_path(model, opt.horizon);
    const int opt_arm = tracked_optimal_arm(model, path);
    const auto R = static_cast<std::size_t>(opt.replications);
    const auto N = static_cast<std::size_t>(opt.horizon);
    const auto k = static_cast<std::size_t>(model.k);

    // curves[r][n] for the three tracked quantities
    std::vector<std::vector<double>> S(R), Rg(R), T(R);
    std::vector<std::vector<std::int64_t>> pulls(R);
    std::vector<std::int64_t> violations(R, 0), skipped(R, 0);
    parallel_for(R, opt.workers, [&](std::size_t r) {
        auto policy = make_policy(static_cast<std::uint64_t>(r));
        auto streams = EpisodeStreams::derive(opt.seed, r, model.k);
        RunLedger ledger = run_episode(model, path, policy, opt.horizon, opt_arm, streams);
        S[r] = std::move(ledger.cum_reward);
        Rg[r] = std::move(ledger.cum_regret);
        T[r].assign(ledger.opt_pulls.begin(), ledger.opt_pulls.end());
        pulls[r] = std::move(ledger.pulls);
        violations[r] = ledger.support_violations;
        skipped[r] = ledger.skipped;
    });

    AggregateResult out;
    out.replications = opt.replications;
    out.seed = opt.seed;
    out.optimal_arm = opt_arm;
    out.rows.resize(N);
    std::vector<double> col(R);
    for (std::size_t n = 0; n < N; ++n) {
        auto& row = out.rows[n];
        row.n = static_cast<Step>(n + 1);
        for (std::size_t r = 0; r < R; ++r) col[r] = S[r][n];
        row.S = mean_se(col);
        for (std::size_t r = 0; r < R; ++r) col[r] = Rg[r][n];
        row.R = mean_se(col);
        for (std::size_t r = 0; r < R; ++r) col[r] = T[r][n];
        row.Topt = mean_se(col);
    }
    out.mean_pulls.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t r = 0; r < R; ++r) col[r] = static_cast<double>(pulls[r][i]);
        out.mean_pulls[i] = mean_se(col).mean;
    }
    for (std::size_t r = 0; r < R; ++r) {
        out.support_violations += violations[r];
        out.skipped_rounds += skipped[r];
    }
    return out;
}

struct BoundInputs {
    double sigma = 1.0;
    ExplorationSchedule schedule;
    LogEnvelope envelope;  // alpha, beta with alpha log t <= Psi(t) <= beta log t
    TailConstants tail;
    Step l = 1;
    Step horizon = 200;
};

struct BoundCurve {
    std::vector<int> arms;                  // suboptimal arms, 0-based
    std::vector<std::vector<double>> et;    // et[j][n - 1] bounds E(T_{arms[j]}(n))
    std::vector<double> regret;             // R_n bound, index n - 1
    double exponent = 0.0;                  // 2 kappa sigma^2 alpha
    double c0 = 0.0;
    double c1 = 0.0;                        // evaluated at the horizon
    bool diverges = false;                  // alpha <= 3 / (2 kappa sigma^2)
};

// Reference curve
//   E(T_i(n)) <= gamma log n + (4 sigma^2 / Delta_i^2) Psi(n) + l + nu sum_{t=l}^{n-1} log t / t^{2 kappa sigma^2 alpha}
//   R_n       <= Delta_bar sum_{i != i*} E(T_i(n)) bound
inline BoundCurve theorem_bound(const AssumptionCertificate& cert, const BoundInputs& in)
{
    if (!cert.optimal_arm) throw ConfigError("bound needs a certificate with a unique optimal arm");
    if (in.l < 1) throw ConfigError("l must be >= 1");
    if (in.horizon < 1) throw ConfigError("horizon must be >= 1");
    BoundCurve out;
    const double s2 = in.sigma * in.sigma;
    out.exponent = 2.0 * in.tail.kappa * s2 * in.envelope.alpha;
    out.diverges = !(out.exponent > 3.0);

    const auto N = static_cast<std::size_t>(in.horizon);
    // series[n - 1] = sum_{t=l}^{n-1} log t / t^exponent
    std::vector<double> series(N, 0.0);
    double acc = 0.0;
    for (Step n = 1; n <= in.horizon; ++n) {
        const Step t = n - 1;
        if (t >= in.l) acc += std::log(static_cast<double>(t)) / std::pow(static_cast<double>(t), out.exponent);
        series[static_cast<std::size_t>(n - 1)] = acc;
    }

    out.regret.assign(N, 0.0);
    const double l = static_cast<double>(in.l);
    for (int i = 0; i < static_cast<int>(cert.delta_lower.size()); ++i) {
        if (i == *cert.optimal_arm) continue;
        const double delta = cert.delta_lower[static_cast<std::size_t>(i)];
        if (!(delta > 0.0))
            throw std::domain_error("bound undefined: arm " + std::to_string(i + 1) + " has zero gap");
        const double explore = 4.0 * s2 / (delta * delta);
        std::vector<double> curve(N);
        for (Step n = 1; n <= in.horizon; ++n) {
            const auto idx = static_cast<std::size_t>(n - 1);
            curve[idx] = cert.availability_gamma * std::log(static_cast<double>(n)) + explore * psi_eval(in.schedule, n) +
                         l + in.tail.nu * series[idx];
            out.regret[idx] += cert.delta_upper * curve[idx];
        }
        out.c0 += cert.delta_upper * (cert.availability_gamma + explore * in.envelope.beta);
        out.c1 += cert.delta_upper * (l + in.tail.nu * series.back());
        out.arms.push_back(i);
        out.et.push_back(std::move(curve));
    }
    return out;
}

enum class SelectionScheme { uniform_random, round_robin };

struct TailGridPoint {
    Step t = 0;
    double vartheta = 0.0;
    double empirical_upper = 0.0;  // worst arm
    double empirical_lower = 0.0;  // worst arm
    double bound = 0.0;            // clamped to [0, 1]
    std::int64_t trials = 0;       // smallest per-arm trial count
    bool pass = false;
};

struct TailReport {
    std::vector<TailGridPoint> points;
    std::int64_t support_violations = 0;
    bool passed() const
    {
        for (const auto& p : points)
            if (!p.pass) return false;
        return true;
    }
};

struct TailOptions {
    std::vector<Step> times{50, 100, 200};
    std::vector<double> varthetas;
    std::int64_t replications = 10000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    SelectionScheme scheme = SelectionScheme::uniform_random;
};

// Frequency of Xhat_i^t >= muhat_i^t + sqrt(vartheta / T_i(t)) (and the mirrored
// lower event) under a policy-independent selection scheme, where muhat is the
// average true mean over the rounds the arm was pulled. A grid point passes
// when for every arm the frequency is within bound + 3 binomial standard errors.
inline TailReport verify_tail(const SystemModel& model, const TailConstants& tail, const TailOptions& opt)
{
    if (opt.times.empty() || opt.varthetas.empty()) throw ConfigError("tail grid must not be empty");
    if (opt.replications < 1) throw ConfigError("replications must be >= 1");
    Step horizon = 0;
    for (Step t : opt.times) {
        if (t < 2) throw ConfigError("tail grid times must be >= 2");
        horizon = std::max(horizon, t);
    }
    for (double v : opt.varthetas)
        if (!(v > 0.0)) throw ConfigError("tail grid vartheta values must be > 0");
    validate(model, horizon);
    const auto path = moment_path(model, horizon);
    const auto k = static_cast<std::size_t>(model.k);
    const std::size_t G = opt.times.size() * opt.varthetas.size();
    const auto R = static_cast<std::size_t>(opt.replications);

    // Per replication: [grid][arm] -> {trial, upper, lower} flags.
    struct Hits {
        std::vector<std::uint8_t> trial, upper, lower;
    };
    std::vector<Hits> hits(R);
    std::vector<std::int64_t> violations(R, 0);

    parallel_for(R, opt.workers, [&](std::size_t r) {
        auto streams = EpisodeStreams::derive(opt.seed, r, model.k);
        Hits h{std::vector<std::uint8_t>(G * k, 0), std::vector<std::uint8_t>(G * k, 0),
               std::vector<std::uint8_t>(G * k, 0)};
        std::vector<std::int64_t> pulls(k, 0);
        std::vector<double> sum(k, 0.0), mean_sum(k, 0.0);
        std::vector<int> avail;
        Eigen::VectorXd theta = sample_initial_state(model, streams.process);
        std::size_t rr = 0;
        for (Step t = 1; t <= horizon; ++t) {
            theta = step_state(model, theta, t, streams.process);
            avail.clear();
            for (int i = 0; i < model.k; ++i)
                if (available(model, i, t)) avail.push_back(i);
            if (!avail.empty()) {
                int arm;
                if (opt.scheme == SelectionScheme::uniform_random) {
                    arm = avail[static_cast<std::size_t>(uniform01(streams.selection) * static_cast<double>(avail.size()))];
                } else {
                    arm = avail[rr++ % avail.size()];
                }
                const auto a = static_cast<std::size_t>(arm);
                const double x = emit_reward(model, theta, arm, t, streams.obs[a]);
                if (x < 0.0 || x > model.reward_cap) ++violations[r];
                ++pulls[a];
                sum[a] += x;
                mean_sum[a] += expected_reward(model, arm, path[static_cast<std::size_t>(t)]);
            }
            for (std::size_t ti = 0; ti < opt.times.size(); ++ti) {
                if (opt.times[ti] != t) continue;
                for (std::size_t vi = 0; vi < opt.varthetas.size(); ++vi) {
                    const std::size_t g = ti * opt.varthetas.size() + vi;
                    for (std::size_t i = 0; i < k; ++i) {
                        if (pulls[i] == 0) continue;
                        const double T = static_cast<double>(pulls[i]);
                        const double dev = sum[i] / T - mean_sum[i] / T;
                        const double width = std::sqrt(opt.varthetas[vi] / T);
                        h.trial[g * k + i] = 1;
                        h.upper[g * k + i] = dev >= width;
                        h.lower[g * k + i] = dev <= -width;
                    }
                }
            }
        }
        hits[r] = std::move(h);
    });

    TailReport report;
    for (auto v : violations) report.support_violations += v;
    for (std::size_t ti = 0; ti < opt.times.size(); ++ti) {
        for (std::size_t vi = 0; vi < opt.varthetas.size(); ++vi) {
            const std::size_t g = ti * opt.varthetas.size() + vi;
            TailGridPoint p;
            p.t = opt.times[ti];
            p.vartheta = opt.varthetas[vi];
            p.bound = tail_bound(tail, p.t, p.vartheta);
            p.trials = std::numeric_limits<std::int64_t>::max();
            p.pass = true;
            for (std::size_t i = 0; i < k; ++i) {
                std::int64_t trials = 0, up = 0, lo = 0;
                for (std::size_t r = 0; r < R; ++r) {
                    trials += hits[r].trial[g * k + i];
                    up += hits[r].upper[g * k + i];
                    lo += hits[r].lower[g * k + i];
                }
                if (trials == 0) continue;
                const double n = static_cast<double>(trials);
                const double fu = static_cast<double>(up) / n;
                const double fl = static_cast<double>(lo) / n;
                const double allowed = p.bound + 3.0 * std::sqrt(p.bound * (1.0 - p.bound) / n);
                p.empirical_upper = std::max(p.empirical_upper, fu);
                p.empirical_lower = std::max(p.empirical_lower, fl);
                p.trials = std::min(p.trials, trials);
                if (fu > allowed || fl > allowed) p.pass = false;
            }
            if (p.trials == std::numeric_limits<std::int64_t>::max()) p.trials = 0;
            report.points.push_back(p);
        }
    }
    return report;
}

} // namespace dmab
