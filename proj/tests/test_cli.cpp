#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dmab/cli.hpp"

using namespace dmab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "dmab_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text)
{
    const fs::path p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

std::vector<std::string> lines(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

CommandArgs args_for(const fs::path& config, const fs::path& out)
{
    CommandArgs a;
    a.config_path = config.string();
    a.overrides.out = out.string();
    return a;
}

int run_cli(const std::string& arguments)
{
    const int status = std::system((std::string(DMAB_CLI_PATH) + " " + arguments + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string source(const char* rel) { return std::string(DMAB_SOURCE_DIR) + "/" + rel; }

} // namespace

TEST(Simulate, WritesAggregateAndReport)
{
    const auto dir = scratch("simulate");
    const auto cfg = write_config(dir, R"({"scenario": {"type": "static", "means": [0.9, 0.5], "half_widths": [0.1, 0.1]},
        "run": {"horizon": 30, "replications": 5, "seed": 2}})");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate(args_for(cfg, dir / "out"), out, err), 0) << err.str();
    const auto rows = lines(dir / "out" / "aggregate.csv");
    ASSERT_EQ(rows.size(), 31u);
    EXPECT_EQ(rows[0], "n,mean_S,se_S,mean_R,se_R,mean_Topt,se_Topt");
    EXPECT_EQ(rows[1].rfind("1,", 0), 0u);
    const json report = json::parse(std::ifstream(dir / "out" / "report.json"));
    EXPECT_EQ(report["seed"], 2);
    EXPECT_EQ(report["digest"].get<std::string>().size(), 16u);
    EXPECT_EQ(report["certificate"]["optimal_arm"], 1);
    EXPECT_TRUE(report.contains("runtime_seconds"));
}

TEST(Simulate, SingleReplicationLeavesStandardErrorsEmpty)
{
    const auto dir = scratch("single");
    const auto cfg = write_config(dir, R"({"scenario": {"type": "static", "means": [0.9, 0.5], "half_widths": [0.1, 0.1]},
        "run": {"horizon": 5, "replications": 1, "seed": 2}})");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate(args_for(cfg, dir), out, err), 0) << err.str();
    const auto rows = lines(dir / "aggregate.csv");
    ASSERT_EQ(rows.size(), 6u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<std::string> fields;
        std::stringstream ss(rows[i]);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
        if (rows[i].back() == ',') fields.emplace_back();
        ASSERT_EQ(fields.size(), 7u) << rows[i];
        EXPECT_TRUE(fields[2].empty() && fields[4].empty() && fields[6].empty()) << rows[i];
        EXPECT_FALSE(fields[1].empty());
    }
}

TEST(Simulate, LineEndingsAreLf)
{
    const auto dir = scratch("lf");
    const auto cfg = write_config(dir, R"({"scenario": {"type": "static", "means": [0.9, 0.5]},
        "run": {"horizon": 5, "replications": 2}})");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate(args_for(cfg, dir), out, err), 0);
    std::ifstream in(dir / "aggregate.csv", std::ios::binary);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(text.find('\r'), std::string::npos);
    EXPECT_EQ(text.back(), '\n');
}

TEST(Simulate, ConfigErrorsExitTwo)
{
    const auto dir = scratch("bad");
    std::ostringstream out, err;
    const auto missing = write_config(dir, R"({"run": {"horizon": 5}})");
    EXPECT_EQ(cmd_simulate(args_for(missing, dir), out, err), 2);
    EXPECT_NE(err.str().find("scenario"), std::string::npos);
    CommandArgs nofile;
    nofile.config_path = (dir / "nope.json").string();
    EXPECT_EQ(cmd_simulate(nofile, out, err), 2);
}

TEST(CheckAssumptions, ParkPassesWithArmFour)
{
    const auto dir = scratch("cert");
    std::ostringstream out, err;
    CommandArgs a;
    a.config_path = source("configs/park_no_noise.json");
    a.overrides.out = dir.string();
    ASSERT_EQ(cmd_check_assumptions(a, out, err), 0) << err.str();
    const json c = json::parse(std::ifstream(dir / "certificate.json"));
    EXPECT_EQ(c["optimal_arm"], 4);
    EXPECT_TRUE(c["passed"].get<bool>());
    for (const char* key : {"a_lower", "a_upper", "sigma_bound", "g_upper", "h_lower", "h_upper", "b", "delta_lower",
                            "delta_upper", "availability_gamma", "digest"})
        EXPECT_TRUE(c.contains(key)) << key;
}

TEST(CheckAssumptions, EqualMeansExitOne)
{
    const auto dir = scratch("equal");
    std::ostringstream out, err;
    CommandArgs a;
    a.config_path = source("configs/static_equal.json");
    a.overrides.out = dir.string();
    EXPECT_EQ(cmd_check_assumptions(a, out, err), 1);
    EXPECT_NE(out.str().find("no unique optimal arm"), std::string::npos);
}

TEST(CheckAssumptions, MalformedMatrixExitTwo)
{
    const auto dir = scratch("malformed");
    const auto cfg = write_config(dir, R"({"scenario": {"type": "explicit", "k": 1, "m": 2,
        "A": {"kind": "periodic", "matrices": [[[1, 0], [0, 1]], [[1, 0]]]},
        "H": [[[1, 0]]], "obs_noise": [{"kind": "zero"}], "theta0_mean": [0, 0], "reward_cap": 1}})");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_check_assumptions(args_for(cfg, dir), out, err), 2);
}

TEST(Bound, ZeroExplorationConfig)
{
    const auto dir = scratch("bound_zero");
    std::ostringstream out, err;
    CommandArgs a;
    a.config_path = source("configs/zero_availability.json");
    a.overrides.out = dir.string();
    ASSERT_EQ(cmd_bound(a, out, err), 0) << err.str();
    EXPECT_NE(err.str().find("warning"), std::string::npos);
    const auto rows = lines(dir / "bound.csv");
    ASSERT_EQ(rows[0], "n,arm,ET_bound,R_bound");
    EXPECT_EQ(rows[1], "1,2,1,0.5");
    EXPECT_EQ(rows[2], "2,2,1,0.5");
    const json b = json::parse(std::ifstream(dir / "bound.json"));
    EXPECT_TRUE(b["diverges"].get<bool>());
    EXPECT_EQ(b["c0"], 0.0);
}

TEST(Bound, ParkHalfCapConverges)
{
    const auto dir = scratch("bound_park");
    std::ostringstream out, err;
    CommandArgs a;
    a.config_path = source("configs/park_bound.json");
    a.overrides.out = dir.string();
    ASSERT_EQ(cmd_bound(a, out, err), 0) << err.str();
    const json b = json::parse(std::ifstream(dir / "bound.json"));
    EXPECT_FALSE(b["diverges"].get<bool>());
    EXPECT_EQ(b["sigma"], 700.0);
    EXPECT_EQ(lines(dir / "bound.csv").size(), 1u + 200u * 4u);
}

TEST(Bound, EqualMeansExitOne)
{
    const auto dir = scratch("bound_equal");
    std::ostringstream out, err;
    CommandArgs a;
    a.config_path = source("configs/static_equal.json");
    a.overrides.out = dir.string();
    EXPECT_EQ(cmd_bound(a, out, err), 1);
}

TEST(VerifyTail, SmallGrid)
{
    const auto dir = scratch("tail");
    const auto cfg = write_config(dir, R"({"scenario": {"type": "static", "means": [0.6, 0.4], "half_widths": [0.3, 0.3], "reward_cap": 1},
        "tail": {"times": [10, 20], "vartheta_factors": [0.5, 1], "replications": 500}})");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_verify_tail(args_for(cfg, dir), out, err), 0) << err.str();
    const auto rows = lines(dir / "tail.csv");
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0], "t,vartheta,empirical_upper,empirical_lower,bound,pass");
    const json j = json::parse(std::ifstream(dir / "tail.json"));
    EXPECT_EQ(j["replications"], 500);
}

TEST(Executable, ExitCodes)
{
    const auto dir = scratch("exe");
    EXPECT_EQ(run_cli("check-assumptions --config " + source("configs/park_no_noise.json") + " --out " + dir.string()), 0);
    EXPECT_EQ(run_cli("check-assumptions --config " + source("configs/static_equal.json") + " --out " + dir.string()), 1);
    EXPECT_EQ(run_cli("simulate --config " + (dir / "missing.json").string()), 2);
    EXPECT_EQ(run_cli("simulate"), 2);
    EXPECT_EQ(run_cli("no-such-command"), 2);
    EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Executable, FlagsOverrideConfig)
{
    const auto dir = scratch("flags");
    ASSERT_EQ(run_cli("simulate --config " + source("configs/static.json") + " --horizon 7 --replications 3 --seed 5 --workers 2 --out " +
                      dir.string()),
              0);
    EXPECT_EQ(lines(dir / "aggregate.csv").size(), 8u);
    const json report = json::parse(std::ifstream(dir / "report.json"));
    EXPECT_EQ(report["replications"], 3);
    EXPECT_EQ(report["seed"], 5);
}

TEST(ReproduceFigures, SixFiles)
{
    const auto dir = scratch("figures");
    CommandArgs a;
    a.overrides.out = dir.string();
    a.overrides.replications = 5;
    a.overrides.horizon = 20;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_reproduce_figures(a, out, err), 0) << err.str();
    for (int i = 1; i <= 6; ++i) {
        const auto rows = lines(dir / ("fig" + std::to_string(i) + ".csv"));
        ASSERT_EQ(rows.size(), 21u) << i;
        EXPECT_EQ(rows[0], "n,mean,se");
    }
    const json meta = json::parse(std::ifstream(dir / "figures.json"));
    EXPECT_NE(meta["no_process_noise"]["digest"], meta["process_noise"]["digest"]);
    // fig3 and fig6 carry regret, equal to the regret columns of a direct simulate run.
    const auto sim = scratch("figures_sim");
    CommandArgs s;
    s.config_path = source("configs/park_no_noise.json");
    s.overrides = a.overrides;
    s.overrides.out = sim.string();
    ASSERT_EQ(cmd_simulate(s, out, err), 0);
    const auto agg = lines(sim / "aggregate.csv");
    const auto fig3 = lines(dir / "fig3.csv");
    for (std::size_t i = 1; i < agg.size(); ++i) {
        std::stringstream ss(agg[i]);
        std::vector<std::string> f;
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        EXPECT_EQ(fig3[i], f[0] + "," + f[3] + "," + f[4]);
    }
}
