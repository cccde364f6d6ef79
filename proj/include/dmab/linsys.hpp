#pragma once
/*
Time-varying linear stochastic system driving the arm rewards:

    theta^t = A^t theta^{t-1} + B^t n_theta^t
    X_i^t   = gamma_i^t (H_i^t theta^t + g_i^t n_xi^t)

plus exact propagation of the first two moments of theta^t. The propagated
moments are simulator-side ground truth (used for regret) and are never shown
to a policy.
*/

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmab/errors.hpp"
#include "dmab/noise.hpp"
#include "dmab/schedule.hpp"

namespace dmab {

struct SystemModel {
    int k = 0;  // arms
    int m = 0;  // state dimension
    MatrixSchedule A;                  // m x m
    MatrixSchedule B;                  // m x q
    std::vector<MatrixSchedule> H;     // k entries, 1 x m
    std::vector<ScalarSchedule> g;     // k entries, > 0
    std::vector<ScalarSchedule> gamma; // k entries, in {0, 1}
    NoiseSpec process_noise;           // q-dimensional
    std::vector<NoiseSpec> obs_noise;  // k scalar specs
    Eigen::VectorXd theta0_mean;
    Eigen::MatrixXd theta0_cov;
    double reward_cap = 1.0;           // chi_x

    int q() const { return static_cast<int>(B.cols()); }

    friend bool operator==(const SystemModel& a, const SystemModel& b)
    {
        return a.k == b.k && a.m == b.m && a.A == b.A && a.B == b.B && a.H == b.H && a.g == b.g &&
               a.gamma == b.gamma && a.process_noise == b.process_noise &&
               a.obs_noise == b.obs_noise && a.theta0_mean == b.theta0_mean &&
               a.theta0_cov == b.theta0_cov && a.reward_cap == b.reward_cap;
    }
};

struct MomentState {
    Step t = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

inline double spectral_norm(const Eigen::MatrixXd& M)
{
    if (M.size() == 0) return 0.0;
    const Eigen::MatrixXd gram = M.rows() <= M.cols() ? Eigen::MatrixXd(M * M.transpose())
                                                       : Eigen::MatrixXd(M.transpose() * M);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline bool is_symmetric_psd(const Eigen::MatrixXd& C, double tol = 1e-10)
{
    if (C.rows() != C.cols()) return false;
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > tol) return false;
    if (C.size() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

// Shapes, dimensions, initial moments and schedule coverage of t = 1..horizon.
inline void validate_structure(const SystemModel& model, Step horizon)
{
    const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (model.k < 1) fail("model needs at least one arm");
    if (model.m < 1) fail("state dimension must be >= 1");
    const auto k = static_cast<std::size_t>(model.k);
    if (model.A.rows() != model.m || model.A.cols() != model.m)
        fail("A must be m x m (m = " + std::to_string(model.m) + ")");
    if (model.B.rows() != model.m) fail("B must have m rows");
    if (model.process_noise.dim() != model.q())
        fail("process noise dimension " + std::to_string(model.process_noise.dim()) +
             " does not match B columns " + std::to_string(model.q()));
    if (model.H.size() != k || model.g.size() != k || model.gamma.size() != k ||
        model.obs_noise.size() != k)
        fail("H, g, gamma and obs_noise need one entry per arm");
    if (model.theta0_mean.size() != model.m) fail("theta0_mean must have m entries");
    if (model.theta0_cov.rows() != model.m || model.theta0_cov.cols() != model.m)
        fail("theta0_cov must be m x m");
    if (!model.theta0_mean.allFinite() || !model.theta0_cov.allFinite())
        fail("initial moments must be finite");
    if (!is_symmetric_psd(model.theta0_cov)) fail("theta0_cov must be symmetric positive semidefinite");
    if (!(model.reward_cap > 0.0) || !std::isfinite(model.reward_cap)) fail("reward_cap must be > 0");
    if (!model.A.covers(horizon) || !model.B.covers(horizon)) fail("A/B table schedules shorter than horizon");
    for (std::size_t i = 0; i < k; ++i) {
        const std::string arm = "arm " + std::to_string(i + 1);
        if (model.H[i].rows() != 1 || model.H[i].cols() != model.m) fail(arm + ": H must be 1 x m");
        if (model.obs_noise[i].dim() != 1) fail(arm + ": observation noise must be scalar");
        if (!model.H[i].covers(horizon) || !model.g[i].covers(horizon) || !model.gamma[i].covers(horizon))
            fail(arm + ": table schedule shorter than horizon");
    }
}

// validate_structure plus g_i^t > 0 and gamma_i^t in {0, 1} over the horizon.
inline void validate(const SystemModel& model, Step horizon)
{
    validate_structure(model, horizon);
    const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    for (std::size_t i = 0; i < static_cast<std::size_t>(model.k); ++i) {
        const std::string arm = "arm " + std::to_string(i + 1);
        for (Step t = 1; t <= horizon; ++t) {
            if (!(model.g[i].eval(t) > 0.0)) fail(arm + ": g must be > 0 (t = " + std::to_string(t) + ")");
            const double gm = model.gamma[i].eval(t);
            if (gm != 0.0 && gm != 1.0)
                fail(arm + ": availability must be exactly 0 or 1 (t = " + std::to_string(t) + ")");
        }
    }
}

inline bool available(const SystemModel& model, int arm, Step t)
{
    return model.gamma[static_cast<std::size_t>(arm)].eval(t) == 1.0;
}

inline Eigen::VectorXd step_state(const SystemModel& model, const Eigen::VectorXd& theta_prev, Step t,
                                  Stream& rng)
{
    if (t < 1) throw ConfigError("state steps start at t = 1");
    if (theta_prev.size() != model.m) throw ConfigError("state vector has wrong dimension");
    Eigen::VectorXd next = model.A.eval(t) * theta_prev;
    if (model.process_noise.kind() != NoiseKind::zero) next.noalias() += model.B.eval(t) * model.process_noise.sample(rng);
    return next;
}

// Arms are 0-based here; exactly 0.0 when the arm is unavailable.
inline double emit_reward(const SystemModel& model, const Eigen::VectorXd& theta, int arm, Step t,
                          Stream& rng)
{
    const auto i = static_cast<std::size_t>(arm);
    if (model.gamma[i].eval(t) == 0.0) return 0.0;
    const double signal = (model.H[i].eval(t) * theta)(0);
    return signal + model.g[i].eval(t) * model.obs_noise[i].sample_component(rng, 0);
}

inline MomentState initial_moments(const SystemModel& model)
{
    return {0, model.theta0_mean, model.theta0_cov};
}

inline MomentState propagate_mean(const SystemModel& model, const MomentState& state)
{
    MomentState next = state;
    next.t = state.t + 1;
    next.mean = model.A.eval(next.t) * state.mean;
    return next;
}

inline MomentState propagate_cov(const SystemModel& model, const MomentState& state)
{
    MomentState next = state;
    next.t = state.t + 1;
    const Eigen::MatrixXd& A = model.A.eval(next.t);
    const Eigen::MatrixXd& B = model.B.eval(next.t);
    Eigen::MatrixXd c = A * state.cov * A.transpose() + B * model.process_noise.covariance() * B.transpose();
    next.cov = 0.5 * (c + c.transpose());
    return next;
}

inline MomentState propagate(const SystemModel& model, const MomentState& state)
{
    MomentState next = propagate_cov(model, state);
    next.mean = model.A.eval(next.t) * state.mean;
    return next;
}

// Moments for t = 0..horizon (index == t).
inline std::vector<MomentState> moment_path(const SystemModel& model, Step horizon)
{
    std::vector<MomentState> path;
    path.reserve(static_cast<std::size_t>(horizon) + 1);
    path.push_back(initial_moments(model));
    for (Step t = 1; t <= horizon; ++t) path.push_back(propagate(model, path.back()));
    return path;
}

// Phi^t_tau = A^t A^{t-1} ... A^tau, identity when tau == t + 1.
inline Eigen::MatrixXd transition_matrix(const SystemModel& model, Step tau, Step t)
{
    if (tau < 1 || tau > t + 1) throw ConfigError("transition_matrix needs 1 <= tau <= t + 1");
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(model.m, model.m);
    for (Step j = tau; j <= t; ++j) phi = model.A.eval(j) * phi;
    return phi;
}

// Covariance of theta^t written out as the sum over noise injections,
// independent of the step-by-step recursion.
inline Eigen::MatrixXd closed_form_cov(const SystemModel& model, Step t)
{
    if (t < 1) throw ConfigError("closed_form_cov needs t >= 1");
    const Eigen::MatrixXd phi0 = transition_matrix(model, 1, t);
    Eigen::MatrixXd c = phi0 * model.theta0_cov * phi0.transpose();
    const Eigen::MatrixXd noise_cov = model.process_noise.covariance();
    for (Step tau = 1; tau <= t; ++tau) {
        const Eigen::MatrixXd phi = transition_matrix(model, tau + 1, t);
        const Eigen::MatrixXd& B = model.B.eval(tau);
        c += phi * B * noise_cov * B.transpose() * phi.transpose();
    }
    return c;
}

// gamma_i^t H_i^t E(theta^t); state must hold the moments at step t >= 1.
inline double expected_reward(const SystemModel& model, int arm, const MomentState& state)
{
    const auto i = static_cast<std::size_t>(arm);
    const double gm = model.gamma[i].eval(state.t);
    if (gm == 0.0) return 0.0;
    return gm * (model.H[i].eval(state.t) * state.mean)(0);
}

// H_i^t E(theta^t) without the availability mask.
inline double unmasked_expected_reward(const SystemModel& model, int arm, const MomentState& state)
{
    return (model.H[static_cast<std::size_t>(arm)].eval(state.t) * state.mean)(0);
}

inline double reward_cov(const SystemModel& model, int arm, const MomentState& state)
{
    const auto i = static_cast<std::size_t>(arm);
    const double gm = model.gamma[i].eval(state.t);
    if (gm == 0.0) return 0.0;
    const Eigen::MatrixXd& H = model.H[i].eval(state.t);
    const double g = model.g[i].eval(state.t);
    return gm * gm * ((H * state.cov * H.transpose())(0, 0) + model.obs_noise[i].variance() * g * g);
}

// Right-hand side of the covariance growth bound
//   ||Sigma(theta^t)|| <= a^2 ||Sigma(theta^0)|| + a^2 ||Sigma_theta||^2 sum_tau ||B^tau||^2,
// with a the upper bound on ||Phi||.
inline double covariance_growth_bound(const SystemModel& model, double a_upper, Step t)
{
    double b_sum = 0.0;
    for (Step tau = 1; tau <= t; ++tau) {
        const double b = spectral_norm(model.B.eval(tau));
        b_sum += b * b;
    }
    const double noise = spectral_norm(model.process_noise.covariance());
    return a_upper * a_upper * spectral_norm(model.theta0_cov) + a_upper * a_upper * noise * noise * b_sum;
}

} // namespace dmab
