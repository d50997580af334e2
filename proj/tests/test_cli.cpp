#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "qtensor_cli_test";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
    fs::create_directories(kWork);
    const fs::path p = kWork / name;
    std::ofstream(p) << text;
    return p;
}

/// Runs the CLI; stdout and stderr go to <out>.log. Returns the exit status.
int cli(const std::string& args, const fs::path& log) {
    fs::create_directories(log.parent_path());
    const std::string cmd = std::string(QTENSOR_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

const char* kSmallRun = R"(
[model]
c02 = 20
c21 = 6
c22 = 2
N = 8
dt = 0.01
[run]
scheme = second
t_final = 0.05
snapshot_every = 2
[setup]
boundary = wall
noise = 0.01
)";

}  // namespace

class Cli : public ::testing::Test {
protected:
    void SetUp() override { fs::remove_all(kWork); }
};

TEST_F(Cli, RunIsDeterministic) {
    const auto cfg = write_config("small.ini", kSmallRun);
    for (const char* d : {"a", "b"})
        ASSERT_EQ(cli("run --config " + cfg.string() + " --out " + (kWork / d).string() + " --seed 5",
                      kWork / (std::string(d) + ".log")),
                  0);
    int compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(kWork / "a")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), kWork / "a");
        EXPECT_EQ(slurp(e.path()), slurp(kWork / "b" / rel)) << rel;
        ++compared;
    }
    EXPECT_GT(compared, 8);
    for (const char* f : {"diagnostics.csv", "summary.csv", "energy.svg", "newton_iters.svg", "eigenvalues.svg",
                          "quiver.svg", "biaxiality.svg", "snapshots/snapshot_000000.csv",
                          "snapshots/snapshot_000002.csv", "snapshots/snapshot_000005.csv"})
        EXPECT_TRUE(fs::exists(kWork / "a" / f)) << f;

    const std::string diag = slurp(kWork / "a" / "diagnostics.csv");
    EXPECT_EQ(diag.substr(0, diag.find('\n')),
              "step,t,energy,newton_iters,max_eig,min_eig,dist_to_upper,dist_to_lower,increment_norm");
    const std::string snap = slurp(kWork / "a" / "snapshots" / "snapshot_000005.csv");
    EXPECT_EQ(snap.substr(0, snap.find('\n')), "l,m,Q11,Q22,Q12,Q13,Q23,lambda_max,lambda_min,biaxiality,n1,n2,n3");

    // a different seed changes the noisy start
    ASSERT_EQ(cli("run --config " + cfg.string() + " --out " + (kWork / "c").string() + " --seed 6", kWork / "c.log"), 0);
    EXPECT_NE(slurp(kWork / "a" / "diagnostics.csv"), slurp(kWork / "c" / "diagnostics.csv"));
}

TEST_F(Cli, ZeroTimeRunWritesInitialSnapshotOnly) {
    std::string text = kSmallRun;
    text.replace(text.find("t_final = 0.05"), 14, "t_final = 0");
    const auto cfg = write_config("zero.ini", text);
    ASSERT_EQ(cli("run --config " + cfg.string() + " --out " + (kWork / "z").string(), kWork / "z.log"), 0);
    int snaps = 0;
    for (const auto& e : fs::directory_iterator(kWork / "z" / "snapshots")) {
        EXPECT_EQ(e.path().filename(), "snapshot_000000.csv");
        ++snaps;
    }
    EXPECT_EQ(snaps, 1);
    std::ifstream in(kWork / "z" / "diagnostics.csv");
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 2);
}

TEST_F(Cli, ConfigErrorsExitWithTwo) {
    const auto bad_key = write_config("bad.ini", "[model]\nc2 = 3\n");
    EXPECT_EQ(cli("run --config " + bad_key.string() + " --out " + (kWork / "o").string(), kWork / "1.log"), 2);
    EXPECT_EQ(cli("run --config " + (kWork / "missing.ini").string() + " --out " + (kWork / "o").string(), kWork / "2.log"), 2);
    EXPECT_EQ(cli("run --out " + (kWork / "o").string(), kWork / "3.log"), 2);
    EXPECT_EQ(cli("frobnicate --config x --out y", kWork / "4.log"), 2);
    const auto steps = write_config("steps.ini", "[model]\ndt = 0.003\n[run]\nt_final = 0.01\n");
    EXPECT_EQ(cli("run --config " + steps.string() + " --out " + (kWork / "o").string(), kWork / "5.log"), 2);
    EXPECT_NE(slurp(kWork / "5.log").find("config error"), std::string::npos);
}

TEST_F(Cli, EmptyBinghamPathIsUsageError) {
    const auto cfg = write_config("empty.ini", "[bingham]\npoints = 0\n");
    EXPECT_EQ(cli("bingham-compare --config " + cfg.string() + " --out " + (kWork / "b").string(), kWork / "b.log"), 2);
}

TEST_F(Cli, BinghamCompareWritesSummaryRow) {
    const auto cfg = write_config("bing.ini", "[bingham]\ngap_max = 1e-2\ngap_min = 1e-4\npoints = 5\ntail = 3\n");
    ASSERT_EQ(cli("bingham-compare --assert --config " + cfg.string() + " --out " + (kWork / "b").string(), kWork / "b.log"), 0);
    const std::string csv = slurp(kWork / "b" / "bingham.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda_min_plus_third,psi,q,ratio");
    EXPECT_NE(csv.find("\nsummary,"), std::string::npos);
    EXPECT_NE(csv.find("bounded=1"), std::string::npos);
    EXPECT_NE(slurp(kWork / "b.log").find("PASS"), std::string::npos);
    EXPECT_TRUE(fs::exists(kWork / "b" / "bingham.svg"));
}

TEST_F(Cli, SolverErrorExitsWithThree) {
    std::string text = kSmallRun;
    text += "[newton]\nmax_iters = 1\n";
    const auto cfg = write_config("tight.ini", text);
    EXPECT_EQ(cli("run --config " + cfg.string() + " --out " + (kWork / "s").string(), kWork / "s.log"), 3);
}

TEST_F(Cli, SingleRungLadderReportsNanSlope) {
    const auto cfg = write_config("ladder.ini", R"(
[model]
N = 4
[run]
t_final = 0.01
[accuracy]
schemes = first
dts = 5e-3
reference_N = 8
reference_dt = 2.5e-3
)");
    const std::string args = "accuracy-time --config " + cfg.string() + " --out " + (kWork / "t").string();
    ASSERT_EQ(cli(args, kWork / "t.log"), 0);
    EXPECT_NE(slurp(kWork / "t.log").find("warning"), std::string::npos);
    EXPECT_NE(slurp(kWork / "t" / "accuracy_time_slopes.csv").find("first,1,nan"), std::string::npos);
    EXPECT_TRUE(fs::exists(kWork / "t" / "accuracy_time.svg"));
    // the reference is reused from the cache on the second invocation, and --assert flags the NaN slope
    EXPECT_EQ(cli(args + " --assert", kWork / "t2.log"), 4);
    EXPECT_NE(slurp(kWork / "t2.log").find("cached"), std::string::npos);
}

TEST_F(Cli, SpaceLadderWithSingleGrid) {
    const auto cfg = write_config("space.ini", R"(
[run]
t_final = 0.01
[accuracy]
schemes = second
grids = 2
reference_N = 8
reference_dt = 2.5e-3
)");
    ASSERT_EQ(cli("accuracy-space --config " + cfg.string() + " --out " + (kWork / "s").string(), kWork / "s.log"), 0);
    EXPECT_NE(slurp(kWork / "s" / "accuracy_space_slopes.csv").find("second,1,nan"), std::string::npos);
}

TEST_F(Cli, SweepWritesPerMemberOutput) {
    const auto cfg = write_config("sweep.ini", R"(
[model]
c02 = 20
c21 = 0.04
N = 8
dt = 0.005
[run]
t_final = 0.05
[setup]
boundary = wall
initial = uniform
director = 1, 1, 0
[sweep]
c22 = 0, 0.32
)");
    ASSERT_EQ(cli("sweep-c22 --config " + cfg.string() + " --out " + (kWork / "w").string(), kWork / "w.log"), 0);
    for (const char* f : {"sweep.csv", "sweep_area.svg", "c22_0/final.csv", "c22_0.32/diagnostics.csv", "c22_0.32/quiver.svg"})
        EXPECT_TRUE(fs::exists(kWork / "w" / f)) << f;
    EXPECT_NE(slurp(kWork / "w" / "sweep.csv").find("\nsummary,monotone_biaxial_area="), std::string::npos);
}
