#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmab/errors.hpp"

namespace dmab {

using Step = std::int64_t;

enum class ScheduleKind { constant, periodic, table, zero };

// Time-indexed matrix sequence M^t, t >= 1, of a fixed declared shape.
// periodic: stores one period, M^t = period[(t - 1) mod N].
// table:    explicit M^1..M^T; evaluating past T is a configuration error.
class MatrixSchedule {
public:
    MatrixSchedule() = default;

    static MatrixSchedule constant(Eigen::MatrixXd value)
    {
        MatrixSchedule s;
        s.kind_ = ScheduleKind::constant;
        s.rows_ = value.rows();
        s.cols_ = value.cols();
        s.mats_ = {std::move(value)};
        s.check();
        return s;
    }

    static MatrixSchedule periodic(std::vector<Eigen::MatrixXd> period)
    {
        MatrixSchedule s = from_list(std::move(period), "periodic");
        s.kind_ = ScheduleKind::periodic;
        return s;
    }

    static MatrixSchedule table(std::vector<Eigen::MatrixXd> values)
    {
        MatrixSchedule s = from_list(std::move(values), "table");
        s.kind_ = ScheduleKind::table;
        return s;
    }

    static MatrixSchedule zero(Eigen::Index rows, Eigen::Index cols)
    {
        if (rows < 1 || cols < 1) throw ConfigError("zero schedule needs a positive shape");
        MatrixSchedule s;
        s.kind_ = ScheduleKind::zero;
        s.rows_ = rows;
        s.cols_ = cols;
        s.mats_ = {Eigen::MatrixXd::Zero(rows, cols)};
        return s;
    }

    ScheduleKind kind() const { return kind_; }
    Eigen::Index rows() const { return rows_; }
    Eigen::Index cols() const { return cols_; }
    // Number of stored matrices (period length for periodic kind).
    std::size_t stored() const { return mats_.size(); }
    const std::vector<Eigen::MatrixXd>& matrices() const { return mats_; }

    const Eigen::MatrixXd& eval(Step t) const
    {
        if (t < 1) throw ConfigError("schedules are indexed from t = 1");
        switch (kind_) {
        case ScheduleKind::constant:
        case ScheduleKind::zero:
            return mats_.front();
        case ScheduleKind::periodic:
            return mats_[static_cast<std::size_t>((t - 1) % static_cast<Step>(mats_.size()))];
        case ScheduleKind::table:
            if (static_cast<std::size_t>(t) > mats_.size())
                throw ConfigError("table schedule has " + std::to_string(mats_.size()) +
                                  " entries, step " + std::to_string(t) + " requested");
            return mats_[static_cast<std::size_t>(t - 1)];
        }
        return mats_.front();
    }

    // Defined for at least t = 1..horizon.
    bool covers(Step horizon) const
    {
        return kind_ != ScheduleKind::table || static_cast<Step>(mats_.size()) >= horizon;
    }

    friend bool operator==(const MatrixSchedule& a, const MatrixSchedule& b)
    {
        if (a.kind_ != b.kind_ || a.rows_ != b.rows_ || a.cols_ != b.cols_ ||
            a.mats_.size() != b.mats_.size())
            return false;
        for (std::size_t i = 0; i < a.mats_.size(); ++i)
            if (a.mats_[i] != b.mats_[i]) return false;
        return true;
    }

private:
    static MatrixSchedule from_list(std::vector<Eigen::MatrixXd> list, const char* what)
    {
        if (list.empty()) throw ConfigError(std::string(what) + " schedule needs at least one matrix");
        MatrixSchedule s;
        s.rows_ = list.front().rows();
        s.cols_ = list.front().cols();
        s.mats_ = std::move(list);
        s.check();
        return s;
    }

    void check() const
    {
        if (rows_ < 1 || cols_ < 1) throw ConfigError("matrix schedule needs a positive shape");
        for (const auto& m : mats_) {
            if (m.rows() != rows_ || m.cols() != cols_)
                throw ConfigError("matrix schedule entries must share one shape");
            if (!m.allFinite()) throw ConfigError("matrix schedule entries must be finite");
        }
    }

    ScheduleKind kind_ = ScheduleKind::zero;
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    std::vector<Eigen::MatrixXd> mats_;
};

// Rounds half away from zero.
inline double nearest_integer(double x) { return std::round(x); }

// gamma^t = 0 iff [log(offset + t + 1)] - [log(offset + t)] == 1, natural log,
// [.] the nearest integer.
inline bool log_schedule_available(std::int64_t offset, Step t)
{
    const double lo = nearest_integer(std::log(static_cast<double>(offset + t)));
    const double hi = nearest_integer(std::log(static_cast<double>(offset + t + 1)));
    return hi - lo != 1.0;
}

enum class ScalarKind { constant, periodic, table, log_unavailable };

// Scalar sequence s^t, t >= 1 (the g_i^t gains and gamma_i^t availability flags).
class ScalarSchedule {
public:
    ScalarSchedule() = default;

    static ScalarSchedule constant(double v)
    {
        ScalarSchedule s;
        s.kind_ = ScalarKind::constant;
        s.values_ = {check(v)};
        return s;
    }

    static ScalarSchedule periodic(std::vector<double> period)
    {
        if (period.empty()) throw ConfigError("periodic scalar schedule needs values");
        for (double v : period) check(v);
        ScalarSchedule s;
        s.kind_ = ScalarKind::periodic;
        s.values_ = std::move(period);
        return s;
    }

    static ScalarSchedule table(std::vector<double> values)
    {
        if (values.empty()) throw ConfigError("table scalar schedule needs values");
        for (double v : values) check(v);
        ScalarSchedule s;
        s.kind_ = ScalarKind::table;
        s.values_ = std::move(values);
        return s;
    }

    static ScalarSchedule log_unavailable(std::int64_t offset)
    {
        if (offset < 0) throw ConfigError("unavailability offset must be >= 0");
        ScalarSchedule s;
        s.kind_ = ScalarKind::log_unavailable;
        s.offset_ = offset;
        return s;
    }

    ScalarKind kind() const { return kind_; }
    const std::vector<double>& values() const { return values_; }
    std::int64_t offset() const { return offset_; }

    double eval(Step t) const
    {
        if (t < 1) throw ConfigError("schedules are indexed from t = 1");
        switch (kind_) {
        case ScalarKind::constant: return values_.front();
        case ScalarKind::periodic:
            return values_[static_cast<std::size_t>((t - 1) % static_cast<Step>(values_.size()))];
        case ScalarKind::table:
            if (static_cast<std::size_t>(t) > values_.size())
                throw ConfigError("table schedule has " + std::to_string(values_.size()) +
                                  " entries, step " + std::to_string(t) + " requested");
            return values_[static_cast<std::size_t>(t - 1)];
        case ScalarKind::log_unavailable:
            return log_schedule_available(offset_, t) ? 1.0 : 0.0;
        }
        return 0.0;
    }

    bool covers(Step horizon) const
    {
        return kind_ != ScalarKind::table || static_cast<Step>(values_.size()) >= horizon;
    }

    friend bool operator==(const ScalarSchedule&, const ScalarSchedule&) = default;

private:
    static double check(double v)
    {
        if (!std::isfinite(v)) throw ConfigError("scalar schedule values must be finite");
        return v;
    }

    ScalarKind kind_ = ScalarKind::constant;
    std::vector<double> values_{1.0};
    std::int64_t offset_ = 0;
};

} // namespace dmab
