#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "test_support.hpp"
#include "uwdepth/commands.hpp"

using namespace uwdepth;
using uwtest::TempDir;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::size_t count_files(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
    return n;
}

void put_images(const fs::path& dir, std::size_t n, std::uint64_t seed) {
    fs::create_directories(dir);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        write_image(dir / ("img" + std::to_string(i) + ".png"), uwtest::random_image(rng, 12, 9));
}

// Dataset whose depth is exactly linear in the (8-bit) R and M values.
void put_planted_dataset(const fs::path& root, const PriorCoefficients& tau) {
    fs::create_directories(root / "RGB");
    fs::create_directories(root / "depth");
    std::mt19937_64 rng(163);
    std::uniform_int_distribution<int> level(0, 255);
    for (int k = 0; k < 4; ++k) {
        Image img(16, 12);
        for (Channel c : kChannels)
            for (double& v : img.channel(c).samples()) v = level(rng) / 255.0;
        const RmiPlanes rmi = rmi_decompose(img);
        write_image(root / ("RGB/p" + std::to_string(k) + ".png"), img);
        write_gray(root / ("depth/p" + std::to_string(k) + ".png"), predict_prior(rmi, tau).values(), 16);
    }
}

#ifdef UWDEPTH_CLI_PATH
int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(UWDEPTH_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST(CmdEnhance, DirectoryOfThree) {
    TempDir dir("cmd_enh");
    put_images(dir / "in", 3, 1);
    const auto st = cli::run_enhance({dir / "in", dir / "out", {}, 1});
    EXPECT_EQ(st.exit_code(), 0);
    EXPECT_EQ(st.processed, 3u);
    EXPECT_EQ(count_files(dir / "out"), 3u);
    EXPECT_TRUE(fs::exists(dir / "out/img1.png"));
}

TEST(CmdEnhance, EmptyDirectory) {
    TempDir dir("cmd_enh_empty");
    fs::create_directories(dir / "in");
    try {
        cli::run_enhance({dir / "in", dir / "out", {}, 1});
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("no input images"), std::string::npos);
    }
}

TEST(CmdEnhance, OneCorruptAmongThree) {
    TempDir dir("cmd_enh_bad");
    put_images(dir / "in", 2, 2);
    write_text(dir / "in/broken.png", "not an image");
    const auto st = cli::run_enhance({dir / "in", dir / "out", {}, 2});
    EXPECT_NE(st.exit_code(), 0);
    EXPECT_EQ(st.processed, 2u);
    EXPECT_EQ(count_files(dir / "out"), 2u);
    ASSERT_EQ(st.failures.size(), 1u);
    EXPECT_NE(st.failures[0].find("broken.png"), std::string::npos);
}

TEST(CmdEnhance, ThreadsGiveIdenticalOutputs) {
    TempDir dir("cmd_enh_thr");
    put_images(dir / "in", 4, 3);
    cli::run_enhance({dir / "in", dir / "one", {}, 1});
    cli::run_enhance({dir / "in", dir / "four", {}, 4});
    for (int i = 0; i < 4; ++i) {
        const std::string name = "img" + std::to_string(i) + ".png";
        EXPECT_EQ(slurp(dir / "one" / name), slurp(dir / "four" / name));
    }
}

TEST(CmdEnhance, UnusableOutputDirectory) {
    TempDir dir("cmd_enh_out");
    put_images(dir / "in", 1, 4);
    write_text(dir / "file", "x");
    EXPECT_THROW(cli::run_enhance({dir / "in", dir / "file/sub", {}, 1}), std::runtime_error);
}

TEST(CmdRmiDump, WritesThreePlanesPerImage) {
    TempDir dir("cmd_rmi");
    put_images(dir / "in", 2, 5);
    const auto st = cli::run_rmi_dump({dir / "in", dir / "out", GrayFormula::bt601, 1});
    EXPECT_EQ(st.exit_code(), 0);
    EXPECT_EQ(count_files(dir / "out"), 6u);
    const Image img = read_image(dir / "in/img0.png");
    const GrayRead m = read_gray(dir / "out/img0_M.png");
    EXPECT_EQ(m.bit_depth, 16);
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
        EXPECT_NEAR(m.plane[i], std::max(img.green()[i], img.blue()[i]), 0.5 / 65535 + 1e-12);
}

TEST(CmdFitPrior, RecoversPlantedCoefficients) {
    TempDir dir("cmd_fit");
    const PriorCoefficients tau{0.1, 0.5, 0.3};
    put_planted_dataset(dir / "data", tau);
    cli::FitPriorOptions opt;
    opt.root = dir / "data";
    opt.stride = 1;
    opt.output = dir / "out/prior.json";
    cli::run_fit_prior(opt);
    const auto j = nlohmann::json::parse(slurp(opt.output));
    EXPECT_NEAR(j.at("tau0").get<double>(), 0.1, 1e-4);
    EXPECT_NEAR(j.at("tau1").get<double>(), 0.5, 1e-4);
    EXPECT_NEAR(j.at("tau2").get<double>(), 0.3, 1e-4);
    EXPECT_EQ(j.at("n_pixels").get<std::size_t>(), 4u * 16 * 12);
}

TEST(CmdFitPrior, StrideStableOnSmoothData) {
    TempDir dir("cmd_fit_stride");
    write_synthetic_set(make_synthetic_set(6, 21), dir / "data");
    cli::FitPriorOptions opt;
    opt.root = dir / "data";
    opt.stride = 1;
    const FitReport a = cli::run_fit_prior(opt);
    opt.stride = 4;
    const FitReport b = cli::run_fit_prior(opt);
    EXPECT_NEAR(a.coefficients.tau0, b.coefficients.tau0, 1e-2);
    EXPECT_NEAR(a.coefficients.tau1, b.coefficients.tau1, 1e-2);
    EXPECT_NEAR(a.coefficients.tau2, b.coefficients.tau2, 1e-2);
    EXPECT_GT(a.n_pixels, b.n_pixels);
}

TEST(CmdFitPrior, EnhanceFlagAndThreads) {
    TempDir dir("cmd_fit_enh");
    write_synthetic_set(make_synthetic_set(5, 22), dir / "data");
    cli::FitPriorOptions opt;
    opt.root = dir / "data";
    opt.enhance = true;
    const FitReport a = cli::run_fit_prior(opt);
    opt.threads = 3;
    const FitReport b = cli::run_fit_prior(opt);
    EXPECT_EQ(a.coefficients, b.coefficients);
    opt.enhance = false;
    EXPECT_NE(cli::run_fit_prior(opt).coefficients, a.coefficients);
}

TEST(CmdFitPrior, EmptyManifest) {
    TempDir dir("cmd_fit_empty");
    fs::create_directories(dir / "data/RGB");
    fs::create_directories(dir / "data/depth");
    cli::FitPriorOptions opt;
    opt.root = dir / "data";
    EXPECT_THROW(cli::run_fit_prior(opt), std::runtime_error);
    EXPECT_THROW(cli::fit_prior_over(0, 1, false, {}, 1, [](std::size_t) { return std::pair<Image, DepthMap>{}; }),
                 std::invalid_argument);
}

TEST(CmdEvaluate, IdenticalDirectoriesScoreZero) {
    TempDir dir("cmd_eval_same");
    write_synthetic_set(make_synthetic_set(3, 8, SyntheticParams{.width = 16, .height = 12}), dir / "d");
    const SetReport r = cli::run_evaluate({dir / "d/depth", dir / "d/depth", {}, cli::ReportFormat::json, 1});
    EXPECT_EQ(r.per_image.size(), 3u);
    EXPECT_EQ(r.aggregate.abs_rel, 0.0);
    EXPECT_EQ(r.aggregate.sq_rel, 0.0);
    EXPECT_EQ(r.aggregate.rmse, 0.0);
    EXPECT_EQ(r.aggregate.log10, 0.0);
}

TEST(CmdEvaluate, HandValuesAndFormatEquivalence) {
    TempDir dir("cmd_eval_hand");
    fs::create_directories(dir / "pred");
    fs::create_directories(dir / "gt");
    // Float files keep 1.1 and 1.8 at single precision; the oracle uses the same floats.
    write_gray(dir / "pred/x.pfm", Plane(2, 1, {1.1, 1.8}));
    write_gray(dir / "gt/x.pfm", Plane(2, 1, {1.0, 2.0}));
    const double p0 = static_cast<float>(1.1), p1 = static_cast<float>(1.8);
    const double abs_rel = (std::abs(1.0 - p0) + std::abs(2.0 - p1) / 2.0) / 2.0;
    const double sq_rel = ((1.0 - p0) * (1.0 - p0) + (2.0 - p1) * (2.0 - p1) / 2.0) / 2.0;
    const double rmse = std::sqrt(((1.0 - p0) * (1.0 - p0) + (2.0 - p1) * (2.0 - p1)) / 2.0);
    const double log10 = (std::abs(std::log10(p0)) + std::abs(std::log10(2.0) - std::log10(p1))) / 2.0;

    const SetReport r = cli::run_evaluate({dir / "pred", dir / "gt", dir / "r.json", cli::ReportFormat::json, 1});
    cli::run_evaluate({dir / "pred", dir / "gt", dir / "r.csv", cli::ReportFormat::csv, 1});
    EXPECT_NEAR(r.per_image[0].abs_rel, abs_rel, 1e-9);
    EXPECT_NEAR(r.per_image[0].sq_rel, sq_rel, 1e-9);
    EXPECT_NEAR(r.per_image[0].rmse, rmse, 1e-9);
    EXPECT_NEAR(r.per_image[0].log10, log10, 1e-9);
    EXPECT_NEAR(r.per_image[0].abs_rel, 0.1, 1e-6);
    EXPECT_NEAR(r.per_image[0].sq_rel, 0.015, 1e-6);
    EXPECT_NEAR(r.per_image[0].rmse, 0.158114, 1e-6);
    EXPECT_NEAR(r.per_image[0].log10, 0.043575, 1e-6);

    const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
    const auto row = j["per_image"][0].get<MetricReport>();
    std::istringstream csv(slurp(dir / "r.csv"));
    std::string header, line;
    std::getline(csv, header);
    std::getline(csv, line);
    EXPECT_EQ(line, csv_row(row));
    EXPECT_EQ(row.abs_rel, r.per_image[0].abs_rel);
    EXPECT_EQ(row.log10, r.per_image[0].log10);
}

TEST(CmdEvaluate, NoPairs) {
    TempDir dir("cmd_eval_none");
    fs::create_directories(dir / "pred");
    fs::create_directories(dir / "gt");
    write_gray(dir / "pred/a.png", Plane(2, 2, 0.5));
    write_gray(dir / "gt/b.png", Plane(2, 2, 0.5));
    EXPECT_THROW(cli::run_evaluate({dir / "pred", dir / "gt", {}, cli::ReportFormat::json, 1}), std::runtime_error);
    EXPECT_THROW(cli::parse_format("xml"), std::invalid_argument);
}

TEST(CmdDemo, SchemaAndDeterminism) {
    TempDir dir("cmd_demo");
    cli::DemoOptions opt;
    opt.n = 10;
    opt.seed = 3;
    opt.synthetic.width = 64;
    opt.synthetic.height = 48;
    opt.workdir = dir / "a";
    const cli::DemoReport r = cli::run_demo(opt);
    opt.workdir = dir / "b";
    cli::run_demo(opt);
    EXPECT_EQ(slurp(dir / "a/demo_report.json"), slurp(dir / "b/demo_report.json"));
    EXPECT_EQ(slurp(dir / "a/demo_report.csv"), slurp(dir / "b/demo_report.csv"));
    EXPECT_EQ(r.n_train, 8u);
    EXPECT_EQ(r.n_test, 2u);

    const auto j = nlohmann::json::parse(slurp(dir / "a/demo_report.json"));
    ASSERT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["rows"][0]["input"], "raw");
    EXPECT_EQ(j["rows"][1]["input"], "enhanced");
    for (const auto& row : j["rows"])
        for (const char* key : {"abs_rel", "sq_rel", "rmse", "log10"}) EXPECT_TRUE(row.at(key).is_number());

    opt.threads = 4;
    opt.workdir.clear();
    const cli::DemoReport t = cli::run_demo(opt);
    EXPECT_NEAR(t.raw.abs_rel, r.raw.abs_rel, 1e-9);
    EXPECT_NEAR(t.enhanced.rmse, r.enhanced.rmse, 1e-9);
}

TEST(CmdDemo, SingleImage) {
    cli::DemoOptions opt;
    opt.n = 1;
    opt.synthetic.width = 32;
    opt.synthetic.height = 24;
    const cli::DemoReport r = cli::run_demo(opt);
    EXPECT_EQ(r.n_train, 1u);
    EXPECT_EQ(r.n_test, 1u);
}

#ifdef UWDEPTH_CLI_PATH

TEST(CliBinary, EnhanceExitCodes) {
    TempDir dir("bin_enh");
    fs::create_directories(dir / "empty");
    EXPECT_NE(run_cli("enhance --input " + (dir / "empty").string() + " --output " + (dir / "o1").string(),
                      dir / "log1"),
              0);
    EXPECT_NE(slurp(dir / "log1").find("no input images"), std::string::npos);

    put_images(dir / "in", 2, 6);
    write_text(dir / "in/corrupt.png", "\x89PNG\r\n garbage");
    const int rc = run_cli("enhance --threads 2 -i " + (dir / "in").string() + " -o " + (dir / "o2").string(),
                           dir / "log2");
    EXPECT_NE(rc, 0);
    EXPECT_EQ(count_files(dir / "o2"), 2u);
    EXPECT_NE(slurp(dir / "log2").find("corrupt.png"), std::string::npos);

    fs::remove(dir / "in/corrupt.png");
    EXPECT_EQ(run_cli("enhance -i " + (dir / "in").string() + " -o " + (dir / "o3").string() + " --alpha1 0.01",
                      dir / "log3"),
              0);
}

TEST(CliBinary, RejectsBadFlags) {
    TempDir dir("bin_flags");
    EXPECT_NE(run_cli("enhance --bogus", dir / "log"), 0);
    EXPECT_NE(run_cli("demo --n 0", dir / "log"), 0);
    EXPECT_NE(run_cli("", dir / "log"), 0);
    write_text(dir / "cfg.txt", "unknown_key = 1\n");
    put_images(dir / "in", 1, 7);
    EXPECT_EQ(run_cli("enhance -i " + (dir / "in").string() + " -o " + (dir / "out").string() + " --config " +
                          (dir / "cfg.txt").string(),
                      dir / "log"),
              2);
}

TEST(CliBinary, DemoAndEvaluate) {
    TempDir dir("bin_demo");
    ASSERT_EQ(run_cli("demo --seed 4 --n 5 --output " + (dir / "a").string(), dir / "log"), 0);
    ASSERT_EQ(run_cli("demo --seed 4 --n 5 --output " + (dir / "b").string() + " --threads 2", dir / "log"), 0);
    EXPECT_EQ(slurp(dir / "a/demo_report.json"), slurp(dir / "b/demo_report.json"));
    const std::string out = slurp(dir / "log");
    EXPECT_NE(out.find("raw: abs_rel="), std::string::npos);
    EXPECT_NE(out.find("enhanced: abs_rel="), std::string::npos);

    write_synthetic_set(make_synthetic_set(2, 1, SyntheticParams{.width = 8, .height = 8}), dir / "d");
    ASSERT_EQ(run_cli("evaluate --pred " + (dir / "d/depth").string() + " --gt " + (dir / "d/depth").string() +
                          " --format csv -o " + (dir / "r.csv").string(),
                      dir / "log"),
              0);
    EXPECT_NE(slurp(dir / "log").find("aggregate: abs_rel=0 "), std::string::npos);
    EXPECT_EQ(slurp(dir / "r.csv").rfind(kMetricCsvHeader, 0), 0u);

    ASSERT_EQ(run_cli("fit-prior -i " + (dir / "d").string() + " -o " + (dir / "p.json").string(), dir / "log"), 0);
    EXPECT_TRUE(nlohmann::json::parse(slurp(dir / "p.json")).contains("tau1"));
}

#endif
