#pragma once
/*
Subcommands behind the dmab executable. Each returns the process exit code:
0 success or pass, 1 check failed, 2 configuration error, 3 runtime contract
violation.
*/

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dmab/assumptions.hpp"
#include "dmab/bandit.hpp"
#include "dmab/config.hpp"
#include "dmab/errors.hpp"
#include "dmab/montecarlo.hpp"

namespace dmab {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_config_error = 2, exit_contract_violation = 3 };

// The two park experiments behind reproduce-figures. configs/park_no_noise.json
// and configs/park_noise.json hold the same text.
inline constexpr const char* kParkNoNoiseConfig = R"({
  "scenario": {
    "type": "park",
    "theta_bar": [400, 350, 750, 1000, 526],
    "alpha": [0.75, 1.0, 1.3333333333333333],
    "process_noise": false,
    "obs_half_width": 50,
    "unavailable_arm": 4,
    "offset": 1,
    "reward_cap": 1400
  },
  "policy": { "schedule": "ucb_normal", "sigma": 200, "init": "sample_each_once" },
  "estimator": { "kind": "sample_mean", "eta": 0.3 },
  "run": { "horizon": 200, "replications": 1000, "seed": 20240501, "workers": 1 },
  "output": { "dir": "out/park_no_noise" }
}
)";

inline constexpr const char* kParkNoiseConfig = R"({
  "scenario": {
    "type": "park",
    "theta_bar": [400, 350, 750, 1000, 526],
    "alpha": [0.75, 1.0, 1.3333333333333333],
    "process_noise": true,
    "process_half_width": 50,
    "obs_half_width": 50,
    "unavailable_arm": 4,
    "offset": 1,
    "reward_cap": 1400
  },
  "policy": { "schedule": "ucb_normal", "sigma": 200, "init": "sample_each_once" },
  "estimator": { "kind": "sample_mean", "eta": 0.3 },
  "run": { "horizon": 200, "replications": 1000, "seed": 20240501, "workers": 1 },
  "output": { "dir": "out/park_noise" }
}
)";

struct CommandArgs {
    std::string config_path;
    Overrides overrides;
};

inline std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot read configuration file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ExperimentConfig load_config(const CommandArgs& args)
{
    if (args.config_path.empty()) throw ConfigError("--config is required");
    return parse_config(read_text(args.config_path), args.config_path, args.overrides);
}

inline std::filesystem::path output_dir(const ExperimentConfig& cfg)
{
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline std::string aggregate_csv(const AggregateResult& res)
{
    std::string s = "n,mean_S,se_S,mean_R,se_R,mean_Topt,se_Topt\n";
    for (const auto& row : res.rows) {
        s += std::to_string(row.n);
        for (const MeanSe& m : {row.S, row.R, row.Topt}) {
            s += ',' + format_double(m.mean);
            s += ',' + format_double(m.se);
        }
        s += '\n';
    }
    return s;
}

enum class FigureQuantity { reward, optimal_pulls, regret };

inline std::string figure_csv(const AggregateResult& res, FigureQuantity q)
{
    std::string s = "n,mean,se\n";
    for (const auto& row : res.rows) {
        const MeanSe& m = q == FigureQuantity::reward ? row.S : q == FigureQuantity::regret ? row.R : row.Topt;
        s += std::to_string(row.n) + ',' + format_double(m.mean) + ',' + format_double(m.se) + '\n';
    }
    return s;
}

inline json certificate_json(const AssumptionCertificate& c)
{
    json j;
    j["horizon"] = c.horizon;
    j["a_lower"] = c.a_lower;
    j["a_upper"] = c.a_upper;
    j["sigma_bound"] = c.sigma_bound;
    j["reward_var_bound"] = c.reward_var_bound;
    j["g_upper"] = c.g_upper;
    j["b"] = c.b_fit;
    j["last_nonzero_b"] = c.last_nonzero_b;
    j["h_lower"] = c.h_lower;
    j["h_upper"] = c.h_upper;
    j["optimal_arm"] = c.optimal_arm ? json(*c.optimal_arm + 1) : json(nullptr);
    j["delta_lower"] = c.delta_lower;
    j["delta_upper"] = c.delta_upper;
    j["availability_gamma"] = c.availability_gamma;
    j["unavailability_counts"] = c.unavailability_counts;
    j["flags"] = {
        {"transition", c.transition_ok},         {"covariance", c.sigma_ok},
        {"availability_binary", c.availability_binary_ok},
        {"g", c.g_ok},                           {"b_decay", c.b_decay_ok},
        {"h", c.h_ok},                           {"unique_optimal_arm", c.optimal_arm.has_value()},
        {"gap", c.gap_ok},                       {"availability_budget", c.availability_ok},
        {"growth_bound_informational", c.growth_bound_holds},
    };
    j["passed"] = c.passed();
    j["messages"] = c.messages;
    return j;
}

inline UcbPolicy make_policy(const ExperimentConfig& cfg, double sigma)
{
    return UcbPolicy(cfg.model.k, cfg.policy.schedule, sigma, cfg.policy.init, cfg.policy.prior);
}

inline AggregateResult run_simulation(const ExperimentConfig& cfg, double sigma)
{
    AggregateOptions opt{cfg.run.horizon, cfg.run.replications, cfg.run.seed, cfg.run.workers};
    return aggregate(cfg.model, [&](std::uint64_t) { return make_policy(cfg, sigma); }, opt);
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn)
{
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const ContractViolation& e) {
        err << "contract violation: " << e.what() << '\n';
        return exit_contract_violation;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_check_failed;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return exit_contract_violation;
    }
}

inline json simulation_report(const ExperimentConfig& cfg, const AggregateResult& res, double sigma)
{
    json j;
    j["seed"] = cfg.run.seed;
    j["digest"] = cfg.digest;
    j["horizon"] = cfg.run.horizon;
    j["replications"] = res.replications;
    j["sigma"] = sigma;
    j["tracked_optimal_arm"] = res.optimal_arm + 1;
    j["mean_pulls"] = res.mean_pulls;
    j["support_violations"] = res.support_violations;
    j["skipped_rounds"] = res.skipped_rounds;
    if (cfg.run.horizon >= 2) {
        const auto cert = certify(cfg.model, cfg.run.horizon);
        j["certificate"] = {{"passed", cert.passed()},
                            {"optimal_arm", cert.optimal_arm ? json(*cert.optimal_arm + 1) : json(nullptr)},
                            {"availability_gamma", cert.availability_gamma},
                            {"delta_upper", cert.delta_upper},
                            {"messages", cert.messages}};
    }
    return j;
}

} // namespace detail

inline int cmd_simulate(const CommandArgs& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        const auto start = std::chrono::steady_clock::now();
        const ExperimentConfig cfg = load_config(args);
        const double sigma = resolve_sigma(cfg.policy, cfg.model, cfg.run.horizon);
        const AggregateResult res = run_simulation(cfg, sigma);
        const auto dir = output_dir(cfg);
        write_file(dir / "aggregate.csv", aggregate_csv(res));
        json report = detail::simulation_report(cfg, res, sigma);
        report["command"] = "simulate";
        report["outputs"] = {"aggregate.csv"};
        report["runtime_seconds"] = detail::seconds_since(start);
        write_file(dir / "report.json", report.dump(2) + "\n");
        if (res.support_violations > 0)
            err << "warning: " << res.support_violations << " rewards fell outside [0, " << cfg.model.reward_cap << "]\n";
        const auto& last = res.rows.back();
        out << "n = " << last.n << ": mean_S " << last.S.mean << ", mean_R " << last.R.mean << ", mean_Topt "
            << last.Topt.mean << " (digest " << cfg.digest << ")\n";
        return exit_ok;
    });
}

inline int cmd_check_assumptions(const CommandArgs& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        const ExperimentConfig cfg = load_config(args);
        const auto cert = certify(cfg.model, cfg.run.horizon);
        json j = certificate_json(cert);
        j["digest"] = cfg.digest;
        write_file(output_dir(cfg) / "certificate.json", j.dump(2) + "\n");
        for (const auto& m : cert.messages) out << m << '\n';
        out << (cert.passed() ? "assumptions hold" : "assumptions fail") << " on 1.." << cfg.run.horizon;
        if (cert.optimal_arm) out << ", optimal arm " << *cert.optimal_arm + 1;
        out << '\n';
        return cert.passed() ? exit_ok : exit_check_failed;
    });
}

inline int cmd_verify_tail(const CommandArgs& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        // --replications sizes the tail experiment here, not the simulation block.
        CommandArgs a = args;
        a.overrides.replications.reset();
        ExperimentConfig cfg = load_config(a);
        if (args.overrides.replications) {
            if (*args.overrides.replications < 1) throw ConfigError("--replications must be >= 1");
            cfg.tail.replications = *args.overrides.replications;
            cfg.effective["tail"]["replications"] = cfg.tail.replications;
            cfg.digest = config_digest(cfg.effective);
        }
        const TailConstants tail = make_tail_constants(cfg.eta, cfg.model.reward_cap);
        TailOptions opt;
        opt.times = cfg.tail.times;
        for (double f : cfg.tail.vartheta_factors) opt.varthetas.push_back(f * tail.chi * tail.chi);
        opt.replications = cfg.tail.replications;
        opt.seed = cfg.run.seed;
        opt.workers = cfg.run.workers;
        opt.scheme = cfg.tail.scheme;
        const TailReport rep = verify_tail(cfg.model, tail, opt);

        std::string csv = "t,vartheta,empirical_upper,empirical_lower,bound,pass\n";
        for (const auto& p : rep.points)
            csv += std::to_string(p.t) + ',' + format_double(p.vartheta) + ',' + format_double(p.empirical_upper) + ',' +
                   format_double(p.empirical_lower) + ',' + format_double(p.bound) + ',' + (p.pass ? "1" : "0") + '\n';
        const auto dir = output_dir(cfg);
        write_file(dir / "tail.csv", csv);
        json j{{"digest", cfg.digest},       {"seed", cfg.run.seed},   {"replications", cfg.tail.replications},
               {"eta", tail.eta},            {"chi", tail.chi},        {"kappa", tail.kappa},
               {"nu", tail.nu},              {"passed", rep.passed()}, {"support_violations", rep.support_violations}};
        write_file(dir / "tail.json", j.dump(2) + "\n");
        out << (rep.passed() ? "tail bound holds" : "tail bound violated") << " on " << rep.points.size()
            << " grid points\n";
        return rep.passed() ? exit_ok : exit_check_failed;
    });
}

inline int cmd_bound(const CommandArgs& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        const ExperimentConfig cfg = load_config(args);
        const auto cert = certify(cfg.model, cfg.run.horizon);
        if (!cert.optimal_arm) {
            err << "error: bound needs a unique optimal arm\n";
            return static_cast<int>(exit_check_failed);
        }
        BoundInputs in;
        in.sigma = resolve_sigma(cfg.policy, cfg.model, cfg.run.horizon);
        in.schedule = cfg.policy.schedule;
        in.envelope = log_envelope(cfg.policy.schedule, cfg.run.horizon);
        in.tail = make_tail_constants(cfg.eta, cfg.model.reward_cap);
        in.l = cfg.bound_l;
        in.horizon = cfg.run.horizon;
        const BoundCurve b = theorem_bound(cert, in);

        std::string csv = "n,arm,ET_bound,R_bound\n";
        for (Step n = 1; n <= in.horizon; ++n) {
            const auto idx = static_cast<std::size_t>(n - 1);
            for (std::size_t j = 0; j < b.arms.size(); ++j)
                csv += std::to_string(n) + ',' + std::to_string(b.arms[j] + 1) + ',' + format_double(b.et[j][idx]) + ',' +
                       format_double(b.regret[idx]) + '\n';
        }
        const auto dir = output_dir(cfg);
        write_file(dir / "bound.csv", csv);
        json j{{"digest", cfg.digest},       {"c0", b.c0},
               {"c1", b.c1},                 {"diverges", b.diverges},
               {"exponent", b.exponent},     {"sigma", in.sigma},
               {"envelope_alpha", in.envelope.alpha}, {"envelope_beta", in.envelope.beta},
               {"optimal_arm", *cert.optimal_arm + 1}, {"certificate_passed", cert.passed()}};
        write_file(dir / "bound.json", j.dump(2) + "\n");
        if (b.diverges)
            err << "warning: 2 kappa sigma^2 alpha = " << b.exponent << " <= 3, the series term does not converge\n";
        out << "c0 = " << format_double(b.c0) << ", c1 = " << format_double(b.c1) << '\n';
        return static_cast<int>(exit_ok);
    });
}

inline int cmd_reproduce_figures(const CommandArgs& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return detail::guarded(err, [&] {
        Overrides ov = args.overrides;
        const std::string dir_name = ov.out.value_or("figures");
        ov.out = dir_name;
        const ExperimentConfig quiet = parse_config(kParkNoNoiseConfig, "<park_no_noise>", ov);
        const ExperimentConfig noisy = parse_config(kParkNoiseConfig, "<park_noise>", ov);
        const auto dir = output_dir(quiet);
        json meta;
        int fig = 1;
        for (const ExperimentConfig* cfg : {&quiet, &noisy}) {
            const double sigma = resolve_sigma(cfg->policy, cfg->model, cfg->run.horizon);
            const AggregateResult res = run_simulation(*cfg, sigma);
            const char* label = cfg == &quiet ? "no_process_noise" : "process_noise";
            meta[label] = detail::simulation_report(*cfg, res, sigma);
            for (FigureQuantity q : {FigureQuantity::reward, FigureQuantity::optimal_pulls, FigureQuantity::regret}) {
                const std::string name = "fig" + std::to_string(fig++) + ".csv";
                write_file(dir / name, figure_csv(res, q));
                meta[label]["outputs"].push_back(name);
            }
        }
        write_file(dir / "figures.json", meta.dump(2) + "\n");
        out << "wrote fig1.csv..fig6.csv to " << dir.string() << '\n';
        return static_cast<int>(exit_ok);
    });
}

} // namespace dmab
