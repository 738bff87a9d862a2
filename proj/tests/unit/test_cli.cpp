// Process-level tests of the mcnn_cli binary.
#include "mcnn/commands.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Proc {
    int code;
    std::string out;
};

Proc run(const std::string& args) {
    const std::string cmd = std::string(MCNN_CLI_PATH) + " " + args + " 2>&1";
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return {-1, ""};
    std::string out;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
    const int st = ::pclose(p);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Lines that are not comments.
std::vector<std::string> rows(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, '\t');) out.push_back(f);
    return out;
}

const std::string kConfig = std::string(MCNN_SOURCE_DIR) + "/configs/synthetic.json";

class Cli : public ::testing::Test {
protected:
    static fs::path dir;
    static fs::path cube;

    static void SetUpTestSuite() {
        dir = fs::temp_directory_path() / ("mcnn_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        cube = dir / "cube.hst";
        const auto r = run("synth --out " + cube.string() + " --seed 3 --height 16 --width 16 --noise 0.05");
        ASSERT_EQ(r.code, 0) << r.out;
    }
    static void TearDownTestSuite() { fs::remove_all(dir); }

    static std::string common(const std::string& extra = "") {
        return "--dataset " + cube.string() + " --config " + kConfig + " " + extra;
    }
};

fs::path Cli::dir;
fs::path Cli::cube;

}  // namespace

TEST_F(Cli, SynthWritesLoadableCube) {
    const auto c = mcnn::load_cube(cube);
    EXPECT_EQ(c.values.dims(), (mcnn::Shape3{16, 16, 32}));
    EXPECT_EQ(c.class_count(), 4u);
}

TEST_F(Cli, TrainWritesCheckpointAndLog) {
    const fs::path out = dir / "train1";
    const auto r = run("train " + common("--epochs 4 --seed 1") + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    ASSERT_TRUE(fs::exists(out / "checkpoint.mcnn"));
    const auto log = rows(slurp(out / "train_log.tsv"));
    ASSERT_EQ(log.size(), 4u);
    EXPECT_EQ(fields(log[0])[0], "1");
    EXPECT_EQ(fields(log[3])[0], "4");
    const auto ck = mcnn::load_checkpoint(out / "checkpoint.mcnn");
    EXPECT_EQ(ck.config.epochs, 4u);
    EXPECT_EQ(ck.config.seed, 1u);
}

TEST_F(Cli, MissingDatasetExitsThreeWithoutOutputs) {
    const fs::path out = dir / "missing";
    const auto r = run("train --dataset " + (dir / "nope.hst").string() + " --out " + out.string());
    EXPECT_EQ(r.code, 3) << r.out;
    EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, CorruptDatasetExitsThree) {
    const fs::path bad = dir / "bad.hst";
    std::ofstream(bad, std::ios::binary) << "HST1garbage";
    const auto r = run("fit-mapping --dataset " + bad.string() + " --out " + (dir / "x.map").string());
    EXPECT_EQ(r.code, 3) << r.out;
    EXPECT_FALSE(fs::exists(dir / "x.map"));
}

TEST_F(Cli, BadArgumentsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("train " + common("--ranks 5,5") + " --out " + (dir / "r").string()).code, 2);
    EXPECT_EQ(run("train " + common("--ranks 8,5,8") + " --out " + (dir / "r").string()).code, 2);
    EXPECT_EQ(run("train " + common("--lr -1") + " --out " + (dir / "r").string()).code, 2);
    EXPECT_EQ(run("train " + common() + " --out " + (dir / "r").string() + " --arm cnn").code, 2);
    EXPECT_EQ(run("validate " + common("--epochs 1") + " --rank-grid 3,3,4").code, 2);
    EXPECT_FALSE(fs::exists(dir / "r"));
}

TEST_F(Cli, HelpForEverySubcommand) {
    for (const char* sub : {"synth", "fit-mapping", "train", "validate", "eval", "ablate"}) {
        const auto r = run(std::string(sub) + " --help");
        EXPECT_EQ(r.code, 0) << sub;
        EXPECT_NE(r.out.find("--"), std::string::npos) << sub;
    }
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, FitMappingReportsConvergence) {
    const fs::path out = dir / "fit.map";
    const auto r = run("fit-mapping " + common() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("iterations_used"), std::string::npos);
    EXPECT_NE(r.out.find("energy_retained"), std::string::npos);
    const auto s = mcnn::load_mapping(out);
    EXPECT_EQ(s.ranks, (mcnn::Shape3{5, 5, 8}));
    EXPECT_TRUE(s.converged);
}

TEST_F(Cli, FitMappingCapExitsFour) {
    auto cfg = mcnn::Json::parse(slurp(kConfig));
    cfg["mapping_tol"] = 1e-300;
    cfg["mapping_max_iters"] = 2;
    const fs::path strict = dir / "strict.json";
    std::ofstream(strict) << cfg.dump();
    const fs::path out = dir / "strict.map";
    const auto r = run("fit-mapping --dataset " + cube.string() + " --config " + strict.string() + " --out " + out.string());
    EXPECT_EQ(r.code, 4) << r.out;
    EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, RepeatsWriteSummary) {
    const fs::path out = dir / "rep";
    const auto r = run("train " + common("--epochs 2") + " --out " + out.string() + " --repeats 2");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(out / "run_1" / "checkpoint.mcnn"));
    EXPECT_TRUE(fs::exists(out / "run_2" / "train_log.tsv"));
    const auto sum = rows(slurp(out / "summary.tsv"));
    ASSERT_EQ(sum.size(), 3u);
    EXPECT_EQ(fields(sum[0])[0], "OA");
    EXPECT_EQ(fields(sum[0]).size(), 4u);
}

TEST_F(Cli, ValidateGrid) {
    const fs::path rep = dir / "grid.tsv";
    const auto r = run("validate " + common("--epochs 2") + " --batches 10,20 --lrs 0.01,0.001 --out " + rep.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto grid = rows(slurp(rep));
    ASSERT_EQ(grid.size(), 4u);
    int best = 0;
    for (const auto& g : grid) best += fields(g).back() == "*" ? 1 : 0;
    EXPECT_EQ(best, 1);

    const auto rk = run("validate " + common("--epochs 1") + " --batches 20 --lrs 0.001 --rank-grid '4,4,10;5,5,8'");
    ASSERT_EQ(rk.code, 0) << rk.out;
    EXPECT_EQ(rows(rk.out).size() >= 2u, true);
    EXPECT_NE(rk.out.find("\t4\t4\t10\t"), std::string::npos);
    EXPECT_NE(rk.out.find("\t5\t5\t8\t"), std::string::npos);
}

TEST_F(Cli, EvalReportAndMap) {
    const fs::path out = dir / "evaltrain";
    ASSERT_EQ(run("train " + common("--epochs 25 --seed 2") + " --out " + out.string()).code, 0);
    const fs::path report = dir / "report.tsv", map = dir / "map.png";
    const auto r = run("eval --checkpoint " + (out / "checkpoint.mcnn").string() + " --dataset " + cube.string() +
                       " --split train --out " + report.string() + " --map " + map.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rep = rows(slurp(report));
    ASSERT_EQ(rep.size(), 4u + 3u);
    EXPECT_EQ(fields(rep[4])[0], "OA");
    EXPECT_EQ(fields(rep[4])[2], "100.00");

    const std::string png = slurp(map);
    ASSERT_GE(png.size(), 24u);
    EXPECT_EQ(png.substr(1, 3), "PNG");
    auto be32 = [&](std::size_t at) {
        std::uint32_t v = 0;
        for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(png[at + i]);
        return v;
    };
    EXPECT_EQ(be32(16), 16u);  // width
    EXPECT_EQ(be32(20), 16u);  // height

    // Band mismatch is a data error.
    const fs::path other = dir / "other.hst";
    ASSERT_EQ(run("synth --out " + other.string() + " --bands 20").code, 0);
    EXPECT_EQ(run("eval --checkpoint " + (out / "checkpoint.mcnn").string() + " --dataset " + other.string()).code, 3);
}

TEST_F(Cli, TrainIsByteDeterministic) {
    const fs::path a = dir / "detA", b = dir / "detB";
    ASSERT_EQ(run("train " + common("--epochs 2 --seed 5") + " --out " + a.string()).code, 0);
    ASSERT_EQ(run("train " + common("--epochs 2 --seed 5") + " --out " + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "checkpoint.mcnn"), slurp(b / "checkpoint.mcnn"));
    EXPECT_EQ(slurp(a / "train_log.tsv"), slurp(b / "train_log.tsv"));
}

TEST_F(Cli, AblateSharedSchema) {
    const fs::path out = dir / "abl";
    const auto r = run("ablate " + common("--epochs 2") + " --arm mapping,per-patch-td --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto tab = rows(slurp(out / "ablation.tsv"));
    ASSERT_EQ(tab.size(), 2u);
    EXPECT_EQ(fields(tab[0])[0], "mapping");
    EXPECT_EQ(fields(tab[1])[0], "per-patch-td");
    EXPECT_EQ(fields(tab[0]).size(), fields(tab[1]).size());
    EXPECT_TRUE(fs::exists(out / "ablation_timing.tsv"));
}
