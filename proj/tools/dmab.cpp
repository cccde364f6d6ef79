#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "dmab/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Dynamic multi-armed bandit experiments"};
    app.require_subcommand(1);

    dmab::CommandArgs args;
    std::uint64_t seed = 0;
    std::int64_t replications = 0;
    dmab::Step horizon = 0;
    std::string out;
    unsigned workers = 0;

    using Command = std::function<int(const dmab::CommandArgs&, std::ostream&, std::ostream&)>;
    const std::map<std::string, std::pair<std::string, Command>> commands{
        {"simulate", {"Run the Monte Carlo experiment and write aggregate.csv", dmab::cmd_simulate}},
        {"check-assumptions", {"Certify the model assumptions and write certificate.json", dmab::cmd_check_assumptions}},
        {"verify-tail", {"Check the estimator tail bound empirically and write tail.csv", dmab::cmd_verify_tail}},
        {"bound", {"Evaluate the regret bound and write bound.csv", dmab::cmd_bound}},
        {"reproduce-figures", {"Run both park experiments and write fig1.csv..fig6.csv", dmab::cmd_reproduce_figures}},
    };

    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        if (name != "reproduce-figures")
            sub->add_option("--config", args.config_path, "JSON experiment configuration")->required();
        sub->add_option("--seed", seed, "Master seed");
        sub->add_option("--replications", replications, "Number of replications")->check(CLI::PositiveNumber);
        sub->add_option("--horizon", horizon, "Horizon N")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "Output directory");
        sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
        subs[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : dmab::exit_config_error;
    }

    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) continue;
        if (sub->count("--seed")) args.overrides.seed = seed;
        if (sub->count("--replications")) args.overrides.replications = replications;
        if (sub->count("--horizon")) args.overrides.horizon = horizon;
        if (sub->count("--out")) args.overrides.out = out;
        if (sub->count("--workers")) args.overrides.workers = workers;
        return commands.at(name).second(args, std::cout, std::cerr);
    }
    return dmab::exit_config_error;
}
