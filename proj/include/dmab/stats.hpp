#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace dmab {

struct LogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Least squares y ~ slope * log(x) + intercept.
inline LogFit fit_log(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_log needs >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LogFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * std::log(x[i]) + f.intercept);
        ss_res += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : std::numeric_limits<double>::quiet_NaN();
    return f;
}

// Running mean / standard error with a fixed accumulation order.
struct MeanSe {
    double mean = 0.0;
    double se = std::numeric_limits<double>::quiet_NaN();  // NaN when count < 2
};

inline MeanSe mean_se(std::span<const double> v)
{
    MeanSe out;
    if (v.empty()) return out;
    double s = 0.0;
    for (double x : v) s += x;
    out.mean = s / static_cast<double>(v.size());
    if (v.size() < 2) return out;
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    const double var = ss / static_cast<double>(v.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(v.size()));
    return out;
}

} // namespace dmab
