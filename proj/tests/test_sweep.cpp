#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace aits;

namespace {

SystemConfig tiny_config() { return testkit::small_config(2, 1, 1, 1, 2, 2, 2, 1); }

}  // namespace

TEST(SweepAxis, ParseRange) {
    const auto a = SweepAxis::parse("d_bi=5:10:45");
    EXPECT_EQ(a.name, "d_bi");
    EXPECT_EQ(a.values, (std::vector<double>{5, 15, 25, 35, 45}));
    EXPECT_EQ(SweepAxis::parse("kappa=0.6:0.1:0.8").values.size(), 3u);
    EXPECT_EQ(SweepAxis::parse("N=20:20:60").name, "n");
    for (const char* bad : {"d_bi", "d_bi=5:10", "d_bi=5:0:45", "d_bi=45:10:5", "foo=1:1:2", "d_bi=a:1:2"}) {
        EXPECT_THROW(SweepAxis::parse(bad), ConfigError) << bad;
    }
}

TEST(SweepAxis, StandardGrids) {
    EXPECT_EQ(SweepAxis::standard("n").values, (std::vector<double>{20, 40, 60}));
    EXPECT_EQ(SweepAxis::standard("p_its_max").values, (std::vector<double>{20, 25, 30}));
    EXPECT_THROW(SweepAxis::standard("bogus"), ConfigError);
}

TEST(ApplyAxis, SetsParameters) {
    const SystemConfig c;
    EXPECT_EQ(apply_axis(c, "d_bi", 15.0).d_bi, 15.0);
    EXPECT_EQ(apply_axis(c, "kappa", 0.6).kappa, 0.6);
    EXPECT_EQ(apply_axis(c, "p_its_max", 20.0).p_its_max_dbm, 20.0);
    const SystemConfig n = apply_axis(c, "n", 60.0);
    EXPECT_EQ(n.elements(), 60);
    EXPECT_EQ(n.its_array.vertical, 4);
    EXPECT_EQ(n.block_sizes.size(), 60u);
    EXPECT_THROW(apply_axis(c, "n", 42.0), ConfigError);
    EXPECT_THROW(apply_axis(c, "kappa", 1.5), ConfigError);
}

TEST(RunSweep, SingleTrialTableEqualsRecord) {
    SweepOptions o;
    o.trials = 1;
    const auto res = run_sweep(tiny_config(), SweepAxis::standard("none"), {Architecture::element()}, o);
    ASSERT_EQ(res.records.size(), 1u);
    ASSERT_EQ(res.table.size(), 1u);
    EXPECT_EQ(res.table[0].mean_wsr, res.records[0].final_wsr);
    EXPECT_EQ(res.table[0].std_error, 0.0);
    EXPECT_EQ(res.table[0].mean_iterations, res.records[0].bcd_iterations);
}

TEST(RunSweep, DeterministicAcrossJobCounts) {
    SweepOptions o;
    o.trials = 3;
    o.seed = 9;
    const std::vector<Architecture> archs{Architecture::element(), Architecture::passive()};
    const auto a = run_sweep(tiny_config(), SweepAxis::parse("kappa=0.6:0.2:0.8"), archs, o);
    o.jobs = 4;
    const auto b = run_sweep(tiny_config(), SweepAxis::parse("kappa=0.6:0.2:0.8"), archs, o);
    ASSERT_EQ(a.records.size(), 12u);
    for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_TRUE(a.records[i].same_outcome(b.records[i]));
}

TEST(RunSweep, PairedArchitecturesShareChannels) {
    const SystemConfig c = tiny_config();
    Rng p0 = make_stream(5, 2, kChannelTag);
    const auto ch = draw_channels(c, p0);
    Rng p1 = make_stream(5, 2, kChannelTag);
    EXPECT_EQ(draw_channels(c, p1).G, ch.G);
    Rng p2 = make_stream(5, 2, kChannelTag + 1);
    EXPECT_NE(draw_channels(c, p2).G, ch.G);

    const auto a = run_trial(c, Architecture::element(), 5, 2, "none", 0.0, true, 0);
    const auto b = run_trial(c, Architecture::element(), 5, 2, "none", 0.0, true, 1);
    const auto u = run_trial(c, Architecture::element(), 5, 2, "none", 0.0, false, 1);
    EXPECT_TRUE(a.same_outcome(b));
    EXPECT_NE(a.final_wsr, u.final_wsr);
}

TEST(RunSweep, SkipsInvalidPoints) {
    SweepOptions o;
    o.trials = 1;
    std::vector<std::string> warnings;
    o.warn = [&](const std::string& m) { warnings.push_back(m); };
    const auto res = run_sweep(tiny_config(), SweepAxis::parse("n=2:1:4"), {Architecture::element()}, o);
    EXPECT_EQ(warnings.size(), 1u);
    ASSERT_EQ(res.table.size(), 2u);
    EXPECT_EQ(res.table[0].axis_value, 2.0);
    EXPECT_EQ(res.table[1].axis_value, 4.0);
}

TEST(RunSweep, IterationAxisTable) {
    SweepOptions o;
    o.trials = 2;
    const auto res = run_sweep(tiny_config(), SweepAxis::standard("iterations"), {Architecture::element()}, o);
    ASSERT_FALSE(res.table.empty());
    EXPECT_EQ(res.table[0].axis_value, 0.0);
    for (std::size_t i = 1; i < res.table.size(); ++i) {
        EXPECT_GE(res.table[i].mean_wsr, res.table[i - 1].mean_wsr - 1e-8);
    }
}

TEST(Cli, SmokeRun) {
    const auto dir = std::filesystem::temp_directory_path() / "aits_cli";
    std::filesystem::create_directories(dir);
    const auto cfg = (dir / "cfg.json").string();
    {
        std::ofstream out(cfg);
        out << R"({"bs_array": [2, 1], "ue_array": [1, 1], "its_array": [2, 2], "users": 2, "streams": 1})";
    }
    const auto out = (dir / "table.csv").string();
    const std::string tool = AITS_TOOL_PATH;
    const std::string cmd = tool + " --config " + cfg + " --trials 2 --sweep d_bi=15:30:45 --arch element,passive --out " +
                            out + " --jobs 2 > " + (dir / "stdout.txt").string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    std::ifstream table(out);
    std::string line;
    int rows = -1;
    while (std::getline(table, line)) ++rows;
    EXPECT_EQ(rows, 4);
    EXPECT_EQ(read_results(out + ".trials.csv").size(), 8u);

    const std::string bad = tool + " --config " + cfg + " --sweep d_bi=1:0:2 --out " + out + " 2> /dev/null";
    const int status = std::system(bad.c_str());
    EXPECT_NE(status, 0);
    std::filesystem::remove_all(dir);
}
