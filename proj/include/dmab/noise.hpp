#pragma once
/*
Bounded, zero-mean noise sources and keyed random streams.

Every random draw in an experiment comes from a stream derived from a
StreamKey (master seed, replication, role). Derivation is a pure function of
the key, so results never depend on which worker ran which replication.
*/

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmab/errors.hpp"

namespace dmab {

using Stream = std::mt19937_64;

enum class StreamRole : std::uint32_t {
    process_noise = 1,
    obs_noise = 2,   // one stream per arm, see StreamKey::arm
    tie_break = 3,   // also drives randomized arm-selection schemes
};

struct StreamKey {
    std::uint64_t master_seed = 0;
    std::uint64_t replication = 0;
    StreamRole role = StreamRole::process_noise;
    std::uint32_t arm = 0;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

// Keyed splitting: each key field is folded through splitmix64, then the two
// resulting words seed a Mersenne twister via seed_seq (both fully specified
// by the standard, so sequences are identical across conforming builds).
inline Stream derive_stream(const StreamKey& key)
{
    std::uint64_t h = detail::splitmix64(key.master_seed);
    h = detail::splitmix64(h ^ key.replication);
    h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(key.role) << 32 | key.arm));
    const std::uint64_t h2 = detail::splitmix64(h ^ 0x5851f42d4c957f2dULL);
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(h2), static_cast<std::uint32_t>(h2 >> 32)};
    return Stream(seq);
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Stream& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on [-1, 1].
inline double uniform_pm1(Stream& rng)
{
    return 2.0 * uniform01(rng) - 1.0;
}

enum class NoiseKind {
    zero,
    uniform_symmetric,       // U(-c, c) per component
    scaled_shifted_uniform,  // s_j * (U(0,1) - 1/2) per component
    discrete_symmetric,      // +-a_j with probability w_j / 2 each
};

class NoiseSpec {
public:
    NoiseSpec() = default;

    static NoiseSpec zero(int dim)
    {
        NoiseSpec n;
        n.kind_ = NoiseKind::zero;
        n.dim_ = check_dim(dim);
        return n;
    }

    static NoiseSpec uniform(double half_width, int dim = 1)
    {
        if (!(half_width >= 0.0) || !std::isfinite(half_width))
            throw ConfigError("uniform noise half-width must be finite and >= 0");
        NoiseSpec n;
        n.kind_ = NoiseKind::uniform_symmetric;
        n.dim_ = check_dim(dim);
        n.params_ = {half_width};
        return n;
    }

    static NoiseSpec scaled_uniform(std::vector<double> scales)
    {
        if (scales.empty())
            throw ConfigError("scaled uniform noise needs at least one scale");
        for (double s : scales)
            if (!(s >= 0.0) || !std::isfinite(s))
                throw ConfigError("scaled uniform noise scales must be finite and >= 0");
        NoiseSpec n;
        n.kind_ = NoiseKind::scaled_shifted_uniform;
        n.dim_ = static_cast<int>(scales.size());
        n.params_ = std::move(scales);
        return n;
    }

    static NoiseSpec discrete(std::vector<double> atoms, std::vector<double> weights, int dim = 1)
    {
        if (atoms.empty() || atoms.size() != weights.size())
            throw ConfigError("discrete noise needs matching, non-empty atoms and weights");
        double total = 0.0;
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            if (!(atoms[j] >= 0.0) || !std::isfinite(atoms[j]))
                throw ConfigError("discrete noise atoms must be finite magnitudes >= 0");
            if (!(weights[j] > 0.0))
                throw ConfigError("discrete noise weights must be positive");
            total += weights[j];
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw ConfigError("discrete noise weights must sum to 1");
        NoiseSpec n;
        n.kind_ = NoiseKind::discrete_symmetric;
        n.dim_ = check_dim(dim);
        n.params_ = std::move(atoms);
        n.weights_ = std::move(weights);
        return n;
    }

    NoiseKind kind() const { return kind_; }
    int dim() const { return dim_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& weights() const { return weights_; }

    // Analytical per-component variance.
    double variance(int component = 0) const
    {
        switch (kind_) {
        case NoiseKind::zero: return 0.0;
        case NoiseKind::uniform_symmetric: return params_[0] * params_[0] / 3.0;
        case NoiseKind::scaled_shifted_uniform:
            return params_.at(static_cast<std::size_t>(component)) *
                   params_.at(static_cast<std::size_t>(component)) / 12.0;
        case NoiseKind::discrete_symmetric: {
            double v = 0.0;
            for (std::size_t j = 0; j < params_.size(); ++j)
                v += weights_[j] * params_[j] * params_[j];
            return v;
        }
        }
        return 0.0;
    }

    // Components are independent, so the covariance is diagonal.
    Eigen::MatrixXd covariance() const
    {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim_, dim_);
        for (int j = 0; j < dim_; ++j) c(j, j) = variance(j);
        return c;
    }

    // Max absolute value any component can take.
    double support_bound() const
    {
        switch (kind_) {
        case NoiseKind::zero: return 0.0;
        case NoiseKind::uniform_symmetric: return params_[0];
        case NoiseKind::scaled_shifted_uniform: {
            double b = 0.0;
            for (double s : params_) b = std::max(b, 0.5 * s);
            return b;
        }
        case NoiseKind::discrete_symmetric: {
            double b = 0.0;
            for (double a : params_) b = std::max(b, a);
            return b;
        }
        }
        return 0.0;
    }

    double sample_component(Stream& rng, int component) const
    {
        switch (kind_) {
        case NoiseKind::zero: return 0.0;
        case NoiseKind::uniform_symmetric: return params_[0] * uniform_pm1(rng);
        case NoiseKind::scaled_shifted_uniform:
            return params_[static_cast<std::size_t>(component)] * (uniform01(rng) - 0.5);
        case NoiseKind::discrete_symmetric: {
            double u = uniform01(rng);
            const double sign = (rng() >> 63) ? 1.0 : -1.0;
            for (std::size_t j = 0; j + 1 < params_.size(); ++j) {
                if (u < weights_[j]) return sign * params_[j];
                u -= weights_[j];
            }
            return sign * params_.back();
        }
        }
        return 0.0;
    }

    Eigen::VectorXd sample(Stream& rng) const
    {
        Eigen::VectorXd v(dim_);
        for (int j = 0; j < dim_; ++j) v(j) = sample_component(rng, j);
        return v;
    }

    std::vector<Eigen::VectorXd> sample(Stream& rng, std::size_t count) const
    {
        std::vector<Eigen::VectorXd> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) out.push_back(sample(rng));
        return out;
    }

    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;

private:
    static int check_dim(int dim)
    {
        if (dim < 1) throw ConfigError("noise dimension must be >= 1");
        return dim;
    }

    NoiseKind kind_ = NoiseKind::zero;
    int dim_ = 1;
    std::vector<double> params_;
    std::vector<double> weights_;
};

} // namespace dmab
