#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "granulo/gradation.hpp"
#include "granulo/raster.hpp"
#include "granulo/report.hpp"
#include "granulo/synth.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace granulo;

namespace {

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

class Cli : public ::testing::Test {
protected:
    static fs::path dir;

    static void SetUpTestSuite() {
        dir = fs::temp_directory_path() / ("granulo_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        const auto corpus = standard_corpus(0);
        spit(dir / "mixed.json", scene_to_json(corpus.at(2).spec));
        spit(dir / "mixed_ref.csv", curve_csv(oracle::truth_curve(corpus.at(2).truth)));
    }

    static void TearDownTestSuite() { fs::remove_all(dir); }

    static CmdResult run(const std::string& args) {
        const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
        const std::string cmd = std::string(GRANULO_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        CmdResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    static std::string p(const std::string& name) { return (dir / name).string(); }

    // Renders the 20-ellipse scene once and analyzes it once.
    static void ensure_mixed_report() {
        if (fs::exists(dir / "mixed_report.json")) return;
        ASSERT_EQ(run("synth " + p("mixed.json") + " --out " + p("mixed.png") + " --truth " + p("mixed_truth.json")).code, 0);
        ASSERT_EQ(run("analyze " + p("mixed.png") + " --out " + p("mixed_report.json")).code, 0);
    }
};

fs::path Cli::dir;

}  // namespace

TEST_F(Cli, Version) {
    const auto r = run("--version");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find(tool_version()), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 64);
    EXPECT_EQ(run("analyze").code, 64);
    EXPECT_EQ(run("analyze x.png --bogus").code, 64);
    EXPECT_EQ(run("frobnicate").code, 64);
}

TEST_F(Cli, SynthNullSceneThenEmptySample) {
    SceneSpec s;
    s.width_px = 800;
    s.height_px = 800;
    s.noise_sigma = 4;
    spit(dir / "null.json", scene_to_json(s));
    const auto r = run("synth " + p("null.json") + " --out " + p("null.png") + " --truth " + p("null_truth.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto truth = nlohmann::json::parse(slurp(dir / "null_truth.json"));
    EXPECT_TRUE(truth["shapes"].empty());
    const auto img = read_image(dir / "null.png");
    EXPECT_EQ(img.width(), 800);

    const auto a = run("analyze " + p("null.png"));
    EXPECT_EQ(a.code, 3);
    EXPECT_NE(a.err.find("no particle"), std::string::npos) << a.err;
    EXPECT_TRUE(a.out.empty());
}

TEST_F(Cli, SynthRejectsBadSpecs) {
    SceneSpec s;
    s.width_px = 600;
    s.height_px = 600;
    ShapeSpec d;
    d.diameter_mm = 5;
    d.center = {400, 400};
    s.shapes = {d, d};
    spit(dir / "overlap.json", scene_to_json(s));
    auto r = run("synth " + p("overlap.json") + " --out " + p("overlap.png"));
    EXPECT_EQ(r.code, 5);
    EXPECT_NE(r.err.find("overlap"), std::string::npos);
    spit(dir / "broken.json", "{\"width_px\": ");
    EXPECT_EQ(run("synth " + p("broken.json") + " --out " + p("broken.png")).code, 5);
    s.shapes = {d};
    s.shapes[0].center = {599, 400};
    spit(dir / "outside.json", scene_to_json(s));
    EXPECT_EQ(run("synth " + p("outside.json") + " --out " + p("outside.png")).code, 5);
}

TEST_F(Cli, AnalyzeErrors) {
    spit(dir / "garbage.png", "definitely not an image");
    EXPECT_EQ(run("analyze " + p("garbage.png")).code, 1);
    EXPECT_EQ(run("analyze " + p("missing.png")).code, 1);
    write_file(dir / "blank.png", encode_png(GrayImage(300, 300, 235)));
    const auto r = run("analyze " + p("blank.png"));
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(run("analyze " + p("blank.png") + " --block 300").code, 64);
    EXPECT_EQ(run("analyze " + p("blank.png") + " --marker-dict " + p("nope.json")).code, 64);
}

TEST_F(Cli, AmbiguousMarkerExitsTwo) {
    SceneSpec s;
    s.width_px = 500;
    s.height_px = 500;
    s.marker = MarkerSpec{1, 200, {100, 100}, 0};
    const auto a = render(s).image;
    s.marker->id = 2;
    const auto b = render(s).image;
    GrayImage both(1000, 500);
    for (int y = 0; y < 500; ++y)
        for (int x = 0; x < 500; ++x) {
            both.at(x, y) = a.at(x, y);
            both.at(x + 500, y) = b.at(x, y);
        }
    write_file(dir / "two.png", encode_png(both));
    EXPECT_EQ(run("analyze " + p("two.png")).code, 2);
}

TEST_F(Cli, AnalyzeTwentyEllipses) {
    ensure_mixed_report();
    const auto j = nlohmann::json::parse(slurp(dir / "mixed_report.json"));
    EXPECT_EQ(j["particle_count"], 20);
    EXPECT_EQ(j["particles"].size(), 20u);
    EXPECT_EQ(j["params"]["block"], 301);
    EXPECT_EQ(j["params"]["c"], 72);
    EXPECT_NEAR(j["calibration"]["pixel_per_mm"].get<double>(), 14.2, 0.14);
}

TEST_F(Cli, AnalyzeIsByteIdentical) {
    ensure_mixed_report();
    const auto r = run("analyze " + p("mixed.png"));
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, slurp(dir / "mixed_report.json"));
}

TEST_F(Cli, AnalyzeCsvAndPlot) {
    ensure_mixed_report();
    const auto r = run("analyze " + p("mixed.png") + " --format csv --out " + p("mixed.csv") + " --plot " + p("mixed.svg"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto parts = slurp(dir / "mixed.csv");
    EXPECT_EQ(parts.rfind("index,size_mm", 0), 0u);
    EXPECT_EQ(std::count(parts.begin(), parts.end(), '\n'), 21);
    EXPECT_EQ(slurp(dir / "mixed.curve.csv").rfind("sieve_mm,percent_finer\n", 0), 0u);
    EXPECT_NE(slurp(dir / "mixed.svg").find("<polyline"), std::string::npos);

    const auto s = run("analyze " + p("mixed.png") + " --format csv");
    ASSERT_EQ(s.code, 0);
    EXPECT_EQ(s.out, parts + "\n" + slurp(dir / "mixed.curve.csv"));
    EXPECT_EQ(run("analyze " + p("mixed.png") + " --format xml").code, 64);
}

TEST_F(Cli, CompareAgainstOwnCurve) {
    ensure_mixed_report();
    const auto curve = curve_from_report(slurp(dir / "mixed_report.json"));
    spit(dir / "self.csv", curve_csv(curve));
    const auto r = run("compare " + p("mixed_report.json") + " " + p("self.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "mape,0\ncoarse[2:9.5],0\nfine[0.075:0.425],NA (no particles)\n");
}

TEST_F(Cli, CompareAgainstTruth) {
    ensure_mixed_report();
    const auto r = run("compare " + p("mixed_report.json") + " " + p("mixed_ref.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string overall, coarse, fine;
    std::getline(lines, overall);
    std::getline(lines, coarse);
    std::getline(lines, fine);
    EXPECT_EQ(overall.rfind("mape,", 0), 0u);
    EXPECT_EQ(coarse.rfind("coarse[2:9.5],", 0), 0u);
    EXPECT_LT(std::stod(coarse.substr(coarse.find(',') + 1)), 5.0);
    EXPECT_EQ(fine, "fine[0.075:0.425],NA (no particles)");
    const auto narrow = run("compare " + p("mixed_report.json") + " " + p("mixed_ref.csv") + " --fine 0.3:0.4");
    EXPECT_NE(narrow.out.find("fine[0.3:0.4],NA (no shared sieves)"), std::string::npos);
}

TEST_F(Cli, CompareErrors) {
    ensure_mixed_report();
    spit(dir / "noheader.csv", "9.5,100\n2.0,50\n");
    auto r = run("compare " + p("mixed_report.json") + " " + p("noheader.csv"));
    EXPECT_EQ(r.code, 6);
    EXPECT_NE(r.err.find("header"), std::string::npos);
    spit(dir / "disjoint.csv", "sieve_mm,percent_finer\n3.0,50\n");
    EXPECT_EQ(run("compare " + p("mixed_report.json") + " " + p("disjoint.csv")).code, 6);
    spit(dir / "zeros.csv", "sieve_mm,percent_finer\n0.075,0\n0.15,0\n");
    EXPECT_EQ(run("compare " + p("mixed_report.json") + " " + p("zeros.csv")).code, 6);
    EXPECT_EQ(run("compare " + p("noheader.csv") + " " + p("mixed_ref.csv")).code, 6);
}

TEST_F(Cli, SweepMatchesAnalyzeCompare) {
    ensure_mixed_report();
    const auto cmp = run("compare " + p("mixed_report.json") + " " + p("mixed_ref.csv"));
    ASSERT_EQ(cmp.code, 0);
    const std::string value = cmp.out.substr(5, cmp.out.find('\n') - 5);
    const auto r = run("sweep " + p("mixed.png") + " --ref " + p("mixed_ref.csv") + " --block 301 --c 72");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "block,c,mape\n301,72," + value + "\n# argmin block=301 c=72 mape=" + value + "\n");
}

TEST_F(Cli, SweepGridAndFailures) {
    ensure_mixed_report();
    const auto r = run("sweep " + p("mixed.png") + " --ref " + p("mixed_ref.csv") + " --block 201:401:200 --c 72:400:328");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::vector<std::string> rows;
    for (std::string line; std::getline(lines, line);) rows.push_back(line);
    ASSERT_EQ(rows.size(), 6u) << r.out;
    EXPECT_EQ(rows[0], "block,c,mape");
    EXPECT_EQ(rows[1].rfind("201,72,", 0), 0u);
    EXPECT_EQ(rows[2], "201,400,NA");
    EXPECT_EQ(rows[3].rfind("401,72,", 0), 0u);
    EXPECT_EQ(rows[4], "401,400,NA");
    EXPECT_EQ(rows[5].rfind("# argmin block=", 0), 0u);
}

TEST_F(Cli, SweepRangeValidation) {
    ensure_mixed_report();
    const std::string base = "sweep " + p("mixed.png") + " --ref " + p("mixed_ref.csv");
    EXPECT_EQ(run(base + " --block 301:101:50").code, 4);
    EXPECT_EQ(run(base + " --block 101:301:0").code, 4);
    EXPECT_EQ(run(base + " --block 100:300:100").code, 4);
    EXPECT_EQ(run(base + " --block abc").code, 4);
    EXPECT_EQ(run(base + " --c 80:40:8").code, 4);
    spit(dir / "noheader2.csv", "1,2\n");
    EXPECT_EQ(run("sweep " + p("mixed.png") + " --ref " + p("noheader2.csv")).code, 6);
}
