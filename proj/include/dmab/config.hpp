#pragma once
/*
JSON experiment configuration.

    {
      "scenario":  { "type": "park" | "static" | "explicit", ... },
      "policy":    { "schedule": "ucb_normal" | "ucl_quantile" | "generic_log",
                     "alpha": a, "beta": b, "sigma": x | "auto" | "half_cap",
                     "init": "sample_each_once" | "prior", "prior": [...] },
      "estimator": { "kind": "sample_mean", "eta": 0.3 },
      "run":       { "horizon": N, "replications": R, "seed": s, "workers": w },
      "tail":      { "times": [...], "vartheta_factors": [...], "replications": R,
                     "scheme": "uniform_random" | "round_robin" },
      "bound":     { "l": 1 },
      "output":    { "dir": "out", "formats": ["csv", "json"] }
    }

Only "scenario" is required. Matrices are nested row-major arrays. Arm numbers
in configuration files and reports are 1-based.
*/

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "dmab/bandit.hpp"
#include "dmab/errors.hpp"
#include "dmab/linsys.hpp"
#include "dmab/montecarlo.hpp"
#include "dmab/scenarios.hpp"

namespace dmab {

using json = nlohmann::json;

enum class SigmaMode { fixed, auto_from_model, half_cap };

struct PolicyConfig {
    ExplorationSchedule schedule = ExplorationSchedule::ucb_normal();
    SigmaMode sigma_mode = SigmaMode::auto_from_model;
    double sigma = 0.0;
    InitMode init = InitMode::sample_each_once;
    std::vector<double> prior;
};

struct TailConfig {
    std::vector<Step> times{50, 100, 200};
    std::vector<double> vartheta_factors{0.5, 1.0, 2.0, 4.0};
    std::int64_t replications = 10000;
    SelectionScheme scheme = SelectionScheme::uniform_random;
};

struct RunConfig {
    Step horizon = 200;
    std::int64_t replications = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

struct ExperimentConfig {
    std::string scenario_type;
    SystemModel model;
    PolicyConfig policy;
    double eta = 0.3;
    RunConfig run;
    TailConfig tail;
    Step bound_l = 1;
    std::string output_dir = ".";
    std::vector<std::string> formats{"csv", "json"};
    json effective;      // config after overrides
    std::string digest;  // of `effective` minus run.workers and output
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> replications;
    std::optional<Step> horizon;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
};

// FNV-1a over the canonical dump (object keys are sorted by nlohmann::json).
inline std::string config_digest(const json& config)
{
    json c = config;
    if (c.contains("run") && c["run"].is_object()) c["run"].erase("workers");
    c.erase("output");
    const std::string text = c.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Shortest form that round-trips is not required; 17 significant digits,
// '.' decimal separator regardless of locale. NaN prints as an empty field.
inline std::string format_double(double x)
{
    if (std::isnan(x)) return {};
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
    return std::string(buf.data(), end);
}

namespace detail {

// 1-based line of the deepest key of `pointer` found in `text`, walking the
// pointer's object keys in order. 0 if nothing can be located.
inline int locate_line(std::string_view text, const std::string& pointer)
{
    std::size_t pos = 0;
    std::size_t found = std::string_view::npos;
    std::size_t start = 1;
    while (start <= pointer.size()) {
        std::size_t stop = pointer.find('/', start);
        if (stop == std::string::npos) stop = pointer.size();
        const std::string token = pointer.substr(start, stop - start);
        start = stop + 1;
        if (token.empty() || token.find_first_not_of("0123456789") == std::string::npos) continue;
        const std::size_t at = text.find("\"" + token + "\"", pos);
        if (at == std::string_view::npos) break;
        found = at;
        pos = at + token.size() + 2;
    }
    if (found == std::string_view::npos) return 0;
    int line = 1;
    for (std::size_t i = 0; i < found; ++i)
        if (text[i] == '\n') ++line;
    return line;
}

class Reader {
public:
    Reader(std::string source, std::string_view text) : source_(std::move(source)), text_(text) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const
    {
        const int line = locate_line(text_, pointer);
        std::string where = source_;
        if (line > 0) where += ":" + std::to_string(line);
        throw ConfigError(where + ": " + (pointer.empty() ? std::string("/") : pointer) + ": " + msg);
    }

    const json& field(const json& obj, const std::string& ptr, const char* key) const
    {
        if (!obj.contains(key)) fail(ptr, std::string("missing required field \"") + key + "\"");
        return obj.at(key);
    }

    void only_keys(const json& obj, const std::string& ptr, std::initializer_list<const char*> keys) const
    {
        if (!obj.is_object()) fail(ptr, "expected an object");
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool ok = false;
            for (const char* k : keys) ok = ok || it.key() == k;
            if (!ok) fail(ptr + "/" + it.key(), "unknown field");
        }
    }

    double number(const json& v, const std::string& ptr) const
    {
        if (!v.is_number()) fail(ptr, "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(ptr, "expected a finite number");
        return d;
    }

    std::int64_t integer(const json& v, const std::string& ptr) const
    {
        if (!v.is_number_integer()) fail(ptr, "expected an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const json& v, const std::string& ptr) const
    {
        if (!v.is_boolean()) fail(ptr, "expected true or false");
        return v.get<bool>();
    }

    std::string string(const json& v, const std::string& ptr) const
    {
        if (!v.is_string()) fail(ptr, "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const json& v, const std::string& ptr) const
    {
        if (!v.is_array()) fail(ptr, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], ptr + "/" + std::to_string(i)));
        return out;
    }

    Eigen::VectorXd vector(const json& v, const std::string& ptr) const
    {
        const auto xs = numbers(v, ptr);
        return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    }

    Eigen::MatrixXd matrix(const json& v, const std::string& ptr) const
    {
        if (!v.is_array() || v.empty()) fail(ptr, "expected a non-empty array of rows");
        std::size_t cols = 0;
        for (std::size_t r = 0; r < v.size(); ++r) {
            const std::string rp = ptr + "/" + std::to_string(r);
            if (!v[r].is_array() || v[r].empty()) fail(rp, "matrix rows must be non-empty arrays");
            if (r == 0) cols = v[r].size();
            if (v[r].size() != cols) fail(rp, "ragged matrix: expected " + std::to_string(cols) + " columns");
        }
        Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
        for (std::size_t r = 0; r < v.size(); ++r)
            for (std::size_t c = 0; c < cols; ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    number(v[r][c], ptr + "/" + std::to_string(r) + "/" + std::to_string(c));
        return m;
    }

    MatrixSchedule matrix_schedule(const json& v, const std::string& ptr) const
    {
        if (v.is_array()) return wrap(ptr, [&] { return MatrixSchedule::constant(matrix(v, ptr)); });
        only_keys(v, ptr, {"kind", "value", "matrices", "rows", "cols"});
        const std::string kind = string(field(v, ptr, "kind"), ptr + "/kind");
        if (kind == "constant")
            return wrap(ptr, [&] { return MatrixSchedule::constant(matrix(field(v, ptr, "value"), ptr + "/value")); });
        if (kind == "zero")
            return wrap(ptr, [&] {
                return MatrixSchedule::zero(integer(field(v, ptr, "rows"), ptr + "/rows"),
                                            integer(field(v, ptr, "cols"), ptr + "/cols"));
            });
        if (kind == "periodic" || kind == "table") {
            const json& list = field(v, ptr, "matrices");
            if (!list.is_array()) fail(ptr + "/matrices", "expected an array of matrices");
            std::vector<Eigen::MatrixXd> mats;
            for (std::size_t i = 0; i < list.size(); ++i)
                mats.push_back(matrix(list[i], ptr + "/matrices/" + std::to_string(i)));
            return wrap(ptr, [&] {
                return kind == "periodic" ? MatrixSchedule::periodic(std::move(mats)) : MatrixSchedule::table(std::move(mats));
            });
        }
        fail(ptr + "/kind", "unknown matrix schedule kind \"" + kind + "\"");
    }

    ScalarSchedule scalar_schedule(const json& v, const std::string& ptr) const
    {
        if (v.is_number()) return ScalarSchedule::constant(number(v, ptr));
        only_keys(v, ptr, {"kind", "value", "values", "offset"});
        const std::string kind = string(field(v, ptr, "kind"), ptr + "/kind");
        if (kind == "constant") return ScalarSchedule::constant(number(field(v, ptr, "value"), ptr + "/value"));
        if (kind == "periodic")
            return wrap(ptr, [&] { return ScalarSchedule::periodic(numbers(field(v, ptr, "values"), ptr + "/values")); });
        if (kind == "table")
            return wrap(ptr, [&] { return ScalarSchedule::table(numbers(field(v, ptr, "values"), ptr + "/values")); });
        if (kind == "log_unavailable")
            return wrap(ptr, [&] { return ScalarSchedule::log_unavailable(integer(field(v, ptr, "offset"), ptr + "/offset")); });
        fail(ptr + "/kind", "unknown scalar schedule kind \"" + kind + "\"");
    }

    NoiseSpec noise(const json& v, const std::string& ptr) const
    {
        only_keys(v, ptr, {"kind", "dim", "half_width", "scales", "atoms", "weights"});
        const std::string kind = string(field(v, ptr, "kind"), ptr + "/kind");
        const int dim = v.contains("dim") ? static_cast<int>(integer(v["dim"], ptr + "/dim")) : 1;
        if (kind == "zero") return wrap(ptr, [&] { return NoiseSpec::zero(dim); });
        if (kind == "uniform")
            return wrap(ptr, [&] { return NoiseSpec::uniform(number(field(v, ptr, "half_width"), ptr + "/half_width"), dim); });
        if (kind == "scaled_uniform")
            return wrap(ptr, [&] { return NoiseSpec::scaled_uniform(numbers(field(v, ptr, "scales"), ptr + "/scales")); });
        if (kind == "discrete")
            return wrap(ptr, [&] {
                return NoiseSpec::discrete(numbers(field(v, ptr, "atoms"), ptr + "/atoms"),
                                           numbers(field(v, ptr, "weights"), ptr + "/weights"), dim);
            });
        fail(ptr + "/kind", "unknown noise kind \"" + kind + "\"");
    }

    // Re-anchors ConfigErrors thrown by constructors at `ptr`.
    template <class F>
    auto wrap(const std::string& ptr, F&& f) const -> decltype(f())
    {
        try {
            return f();
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            if (msg.rfind(source_, 0) == 0) throw;
            fail(ptr, msg);
        }
    }

private:
    std::string source_;
    std::string_view text_;
};

inline json matrix_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json schedule_json(const MatrixSchedule& s)
{
    switch (s.kind()) {
    case ScheduleKind::constant: return {{"kind", "constant"}, {"value", matrix_json(s.matrices().front())}};
    case ScheduleKind::zero: return {{"kind", "zero"}, {"rows", s.rows()}, {"cols", s.cols()}};
    case ScheduleKind::periodic:
    case ScheduleKind::table: {
        json mats = json::array();
        for (const auto& m : s.matrices()) mats.push_back(matrix_json(m));
        return {{"kind", s.kind() == ScheduleKind::periodic ? "periodic" : "table"}, {"matrices", mats}};
    }
    }
    return {};
}

inline json schedule_json(const ScalarSchedule& s)
{
    switch (s.kind()) {
    case ScalarKind::constant: return {{"kind", "constant"}, {"value", s.values().front()}};
    case ScalarKind::periodic: return {{"kind", "periodic"}, {"values", s.values()}};
    case ScalarKind::table: return {{"kind", "table"}, {"values", s.values()}};
    case ScalarKind::log_unavailable: return {{"kind", "log_unavailable"}, {"offset", s.offset()}};
    }
    return {};
}

inline json noise_json(const NoiseSpec& n)
{
    switch (n.kind()) {
    case NoiseKind::zero: return {{"kind", "zero"}, {"dim", n.dim()}};
    case NoiseKind::uniform_symmetric: return {{"kind", "uniform"}, {"dim", n.dim()}, {"half_width", n.params()[0]}};
    case NoiseKind::scaled_shifted_uniform: return {{"kind", "scaled_uniform"}, {"scales", n.params()}};
    case NoiseKind::discrete_symmetric:
        return {{"kind", "discrete"}, {"dim", n.dim()}, {"atoms", n.params()}, {"weights", n.weights()}};
    }
    return {};
}

} // namespace detail

// Explicit scenario block describing `model` schedule by schedule.
inline json model_to_json(const SystemModel& model)
{
    json j;
    j["type"] = "explicit";
    j["k"] = model.k;
    j["m"] = model.m;
    j["A"] = detail::schedule_json(model.A);
    j["B"] = detail::schedule_json(model.B);
    j["H"] = json::array();
    j["g"] = json::array();
    j["gamma"] = json::array();
    j["obs_noise"] = json::array();
    for (int i = 0; i < model.k; ++i) {
        const auto a = static_cast<std::size_t>(i);
        j["H"].push_back(detail::schedule_json(model.H[a]));
        j["g"].push_back(detail::schedule_json(model.g[a]));
        j["gamma"].push_back(detail::schedule_json(model.gamma[a]));
        j["obs_noise"].push_back(detail::noise_json(model.obs_noise[a]));
    }
    j["process_noise"] = detail::noise_json(model.process_noise);
    j["theta0_mean"] = std::vector<double>(model.theta0_mean.data(), model.theta0_mean.data() + model.theta0_mean.size());
    j["theta0_cov"] = detail::matrix_json(model.theta0_cov);
    j["reward_cap"] = model.reward_cap;
    return j;
}

namespace detail {

inline SystemModel parse_explicit(const Reader& rd, const json& s)
{
    const std::string p = "/scenario";
    rd.only_keys(s, p, {"type", "k", "m", "A", "B", "H", "g", "gamma", "process_noise", "obs_noise", "theta0_mean",
                        "theta0_cov", "reward_cap"});
    SystemModel m;
    m.k = static_cast<int>(rd.integer(rd.field(s, p, "k"), p + "/k"));
    m.m = static_cast<int>(rd.integer(rd.field(s, p, "m"), p + "/m"));
    if (m.k < 1) rd.fail(p + "/k", "must be >= 1");
    if (m.m < 1) rd.fail(p + "/m", "must be >= 1");
    m.A = rd.matrix_schedule(rd.field(s, p, "A"), p + "/A");
    m.B = s.contains("B") ? rd.matrix_schedule(s["B"], p + "/B") : MatrixSchedule::zero(m.m, 1);
    m.process_noise = s.contains("process_noise") ? rd.noise(s["process_noise"], p + "/process_noise")
                                                  : NoiseSpec::zero(static_cast<int>(m.B.cols()));
    const auto per_arm = [&](const char* key) -> const json& {
        const json& v = rd.field(s, p, key);
        if (!v.is_array() || v.size() != static_cast<std::size_t>(m.k))
            rd.fail(p + "/" + key, "expected one entry per arm (" + std::to_string(m.k) + ")");
        return v;
    };
    const json& H = per_arm("H");
    for (std::size_t i = 0; i < H.size(); ++i) m.H.push_back(rd.matrix_schedule(H[i], p + "/H/" + std::to_string(i)));
    if (s.contains("g")) {
        const json& g = per_arm("g");
        for (std::size_t i = 0; i < g.size(); ++i) m.g.push_back(rd.scalar_schedule(g[i], p + "/g/" + std::to_string(i)));
    } else {
        m.g.assign(static_cast<std::size_t>(m.k), ScalarSchedule::constant(1.0));
    }
    if (s.contains("gamma")) {
        const json& gm = per_arm("gamma");
        for (std::size_t i = 0; i < gm.size(); ++i)
            m.gamma.push_back(rd.scalar_schedule(gm[i], p + "/gamma/" + std::to_string(i)));
    } else {
        m.gamma.assign(static_cast<std::size_t>(m.k), ScalarSchedule::constant(1.0));
    }
    const json& obs = per_arm("obs_noise");
    for (std::size_t i = 0; i < obs.size(); ++i) m.obs_noise.push_back(rd.noise(obs[i], p + "/obs_noise/" + std::to_string(i)));
    m.theta0_mean = rd.vector(rd.field(s, p, "theta0_mean"), p + "/theta0_mean");
    m.theta0_cov = s.contains("theta0_cov") ? rd.matrix(s["theta0_cov"], p + "/theta0_cov")
                                            : Eigen::MatrixXd::Zero(m.m, m.m);
    m.reward_cap = rd.number(rd.field(s, p, "reward_cap"), p + "/reward_cap");
    return m;
}

inline SystemModel parse_scenario(const Reader& rd, const json& s, std::string& type)
{
    const std::string p = "/scenario";
    if (!s.is_object()) rd.fail(p, "expected an object");
    type = rd.string(rd.field(s, p, "type"), p + "/type");
    if (type == "park") {
        rd.only_keys(s, p, {"type", "theta_bar", "alpha", "process_noise", "process_half_width", "obs_half_width",
                            "unavailable_arm", "offset", "reward_cap"});
        ParkScenario sc;
        if (s.contains("theta_bar")) sc.theta_bar = rd.numbers(s["theta_bar"], p + "/theta_bar");
        if (s.contains("alpha")) sc.alpha = rd.numbers(s["alpha"], p + "/alpha");
        if (s.contains("process_noise")) sc.process_noise = rd.boolean(s["process_noise"], p + "/process_noise");
        if (s.contains("process_half_width")) sc.process_half_width = rd.number(s["process_half_width"], p + "/process_half_width");
        if (s.contains("obs_half_width")) sc.obs_half_width = rd.number(s["obs_half_width"], p + "/obs_half_width");
        if (s.contains("unavailable_arm"))
            sc.unavailable_arm = static_cast<int>(rd.integer(s["unavailable_arm"], p + "/unavailable_arm")) - 1;
        if (s.contains("offset")) sc.offset = rd.integer(s["offset"], p + "/offset");
        if (s.contains("reward_cap")) sc.reward_cap = rd.number(s["reward_cap"], p + "/reward_cap");
        return rd.wrap(p, [&] { return build_park(sc); });
    }
    if (type == "static") {
        rd.only_keys(s, p, {"type", "means", "half_widths", "reward_cap"});
        const auto means = rd.numbers(rd.field(s, p, "means"), p + "/means");
        const auto widths = s.contains("half_widths") ? rd.numbers(s["half_widths"], p + "/half_widths")
                                                      : std::vector<double>(means.size(), 0.0);
        const double cap = s.contains("reward_cap") ? rd.number(s["reward_cap"], p + "/reward_cap") : 0.0;
        return rd.wrap(p, [&] { return build_static(means, widths, cap); });
    }
    if (type == "explicit") return parse_explicit(rd, s);
    rd.fail(p + "/type", "unknown scenario type \"" + type + "\" (park, static, explicit)");
}

} // namespace detail

inline ExperimentConfig parse_config(std::string_view text, const std::string& source, const Overrides& ov = {})
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line:column.
        int line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
    }
    const detail::Reader rd(source, text);
    rd.only_keys(root, "", {"scenario", "policy", "estimator", "run", "tail", "bound", "output"});
    if (!root.contains("scenario")) rd.fail("", "missing required block \"scenario\"");

    // Overrides are folded into the JSON so the digest covers them.
    if (ov.seed) root["run"]["seed"] = *ov.seed;
    if (ov.replications) root["run"]["replications"] = *ov.replications;
    if (ov.horizon) root["run"]["horizon"] = *ov.horizon;
    if (ov.workers) root["run"]["workers"] = *ov.workers;
    if (ov.out) root["output"]["dir"] = *ov.out;

    ExperimentConfig cfg;
    cfg.model = detail::parse_scenario(rd, root["scenario"], cfg.scenario_type);

    if (root.contains("policy")) {
        const json& p = root["policy"];
        const std::string pp = "/policy";
        rd.only_keys(p, pp, {"schedule", "alpha", "beta", "sigma", "init", "prior"});
        const std::string kind = p.contains("schedule") ? rd.string(p["schedule"], pp + "/schedule") : "ucb_normal";
        if (kind == "ucb_normal") {
            cfg.policy.schedule = ExplorationSchedule::ucb_normal();
        } else if (kind == "ucl_quantile") {
            cfg.policy.schedule = ExplorationSchedule::ucl_quantile();
        } else if (kind == "generic_log") {
            const double a = rd.number(rd.field(p, pp, "alpha"), pp + "/alpha");
            const double b = p.contains("beta") ? rd.number(p["beta"], pp + "/beta") : a;
            cfg.policy.schedule = rd.wrap(pp, [&] { return ExplorationSchedule::generic_log(a, b); });
        } else {
            rd.fail(pp + "/schedule", "unknown schedule \"" + kind + "\"");
        }
        if (p.contains("sigma")) {
            const json& s = p["sigma"];
            if (s.is_string()) {
                const std::string mode = s.get<std::string>();
                if (mode == "auto") cfg.policy.sigma_mode = SigmaMode::auto_from_model;
                else if (mode == "half_cap") cfg.policy.sigma_mode = SigmaMode::half_cap;
                else rd.fail(pp + "/sigma", "expected a positive number, \"auto\" or \"half_cap\"");
            } else {
                cfg.policy.sigma_mode = SigmaMode::fixed;
                cfg.policy.sigma = rd.number(s, pp + "/sigma");
                if (!(cfg.policy.sigma > 0.0)) rd.fail(pp + "/sigma", "must be positive");
            }
        }
        if (p.contains("init")) {
            const std::string init = rd.string(p["init"], pp + "/init");
            if (init == "sample_each_once") cfg.policy.init = InitMode::sample_each_once;
            else if (init == "prior") cfg.policy.init = InitMode::prior_estimates;
            else rd.fail(pp + "/init", "expected \"sample_each_once\" or \"prior\"");
        }
        if (cfg.policy.init == InitMode::prior_estimates) {
            cfg.policy.prior = rd.numbers(rd.field(p, pp, "prior"), pp + "/prior");
            if (cfg.policy.prior.size() != static_cast<std::size_t>(cfg.model.k))
                rd.fail(pp + "/prior", "expected one prior estimate per arm");
        }
    }
    if (root.contains("estimator")) {
        const json& e = root["estimator"];
        rd.only_keys(e, "/estimator", {"kind", "eta"});
        if (e.contains("kind") && rd.string(e["kind"], "/estimator/kind") != "sample_mean")
            rd.fail("/estimator/kind", "only \"sample_mean\" is supported");
        if (e.contains("eta")) cfg.eta = rd.number(e["eta"], "/estimator/eta");
        if (!(cfg.eta > 0.0 && cfg.eta < 4.0)) rd.fail("/estimator/eta", "must lie in (0, 4)");
    }
    if (root.contains("run")) {
        const json& r = root["run"];
        rd.only_keys(r, "/run", {"horizon", "replications", "seed", "workers"});
        if (r.contains("horizon")) cfg.run.horizon = rd.integer(r["horizon"], "/run/horizon");
        if (r.contains("replications")) cfg.run.replications = rd.integer(r["replications"], "/run/replications");
        if (r.contains("seed")) {
            if (!r["seed"].is_number_unsigned() && !r["seed"].is_number_integer()) rd.fail("/run/seed", "expected an integer");
            cfg.run.seed = r["seed"].get<std::uint64_t>();
        }
        if (r.contains("workers")) cfg.run.workers = static_cast<unsigned>(rd.integer(r["workers"], "/run/workers"));
        if (cfg.run.horizon < 1) rd.fail("/run/horizon", "must be >= 1");
        if (cfg.run.replications < 1) rd.fail("/run/replications", "must be >= 1");
        if (cfg.run.workers < 1) rd.fail("/run/workers", "must be >= 1");
    }
    if (root.contains("tail")) {
        const json& t = root["tail"];
        rd.only_keys(t, "/tail", {"times", "vartheta_factors", "replications", "scheme"});
        if (t.contains("times")) {
            cfg.tail.times.clear();
            for (double x : rd.numbers(t["times"], "/tail/times")) {
                if (x < 2 || x != std::floor(x)) rd.fail("/tail/times", "times must be integers >= 2");
                cfg.tail.times.push_back(static_cast<Step>(x));
            }
        }
        if (t.contains("vartheta_factors")) cfg.tail.vartheta_factors = rd.numbers(t["vartheta_factors"], "/tail/vartheta_factors");
        for (double f : cfg.tail.vartheta_factors)
            if (!(f > 0.0)) rd.fail("/tail/vartheta_factors", "factors must be positive");
        if (t.contains("replications")) cfg.tail.replications = rd.integer(t["replications"], "/tail/replications");
        if (cfg.tail.replications < 1) rd.fail("/tail/replications", "must be >= 1");
        if (t.contains("scheme")) {
            const std::string s = rd.string(t["scheme"], "/tail/scheme");
            if (s == "uniform_random") cfg.tail.scheme = SelectionScheme::uniform_random;
            else if (s == "round_robin") cfg.tail.scheme = SelectionScheme::round_robin;
            else rd.fail("/tail/scheme", "expected \"uniform_random\" or \"round_robin\"");
        }
    }
    if (root.contains("bound")) {
        rd.only_keys(root["bound"], "/bound", {"l"});
        if (root["bound"].contains("l")) cfg.bound_l = rd.integer(root["bound"]["l"], "/bound/l");
        if (cfg.bound_l < 1) rd.fail("/bound/l", "must be >= 1");
    }
    if (root.contains("output")) {
        const json& o = root["output"];
        rd.only_keys(o, "/output", {"dir", "formats"});
        if (o.contains("dir")) cfg.output_dir = rd.string(o["dir"], "/output/dir");
        if (o.contains("formats")) {
            cfg.formats.clear();
            if (!o["formats"].is_array()) rd.fail("/output/formats", "expected an array");
            for (const auto& f : o["formats"]) cfg.formats.push_back(rd.string(f, "/output/formats"));
        }
    }
    rd.wrap("/scenario", [&] {
        validate(cfg.model, cfg.run.horizon);
        return 0;
    });

    cfg.effective = root;
    cfg.digest = config_digest(root);
    return cfg;
}

// sigma used by the policy: fixed value, chi/2, or sqrt(max_{i,t} Var X_i^t)
// over the horizon (falling back to chi/2 for deterministic rewards).
inline double resolve_sigma(const PolicyConfig& p, const SystemModel& model, Step horizon)
{
    switch (p.sigma_mode) {
    case SigmaMode::fixed: return p.sigma;
    case SigmaMode::half_cap: return model.reward_cap / 2.0;
    case SigmaMode::auto_from_model: {
        double v = 0.0;
        for (const auto& st : moment_path(model, horizon)) {
            if (st.t == 0) continue;
            for (int i = 0; i < model.k; ++i) v = std::max(v, reward_cov(model, i, st));
        }
        return v > 0.0 ? std::sqrt(v) : model.reward_cap / 2.0;
    }
    }
    return model.reward_cap / 2.0;
}

} // namespace dmab
