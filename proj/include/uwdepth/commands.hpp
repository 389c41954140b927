#pragma once

// Batch front ends behind the uwdepth tool. Each run_* function does the work
// of one subcommand and returns a structured result; printing and exit codes
// are left to the caller.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "uwdepth/config.hpp"
#include "uwdepth/dataset.hpp"
#include "uwdepth/enhance.hpp"
#include "uwdepth/image_io.hpp"
#include "uwdepth/metrics.hpp"
#include "uwdepth/parallel.hpp"
#include "uwdepth/prior.hpp"
#include "uwdepth/rmi.hpp"

namespace uwdepth::cli {

namespace fs = std::filesystem;

struct BatchStatus {
    std::size_t total = 0;
    std::size_t processed = 0;
    std::vector<std::string> failures;  // one message per failed input, input order
    double seconds = 0.0;

    int exit_code() const { return failures.empty() ? 0 : 1; }
};

// A single file, or every image file directly inside a directory, sorted.
inline std::vector<fs::path> list_inputs(const fs::path& input) {
    std::vector<fs::path> out;
    if (fs::is_regular_file(input)) {
        out.push_back(input);
    } else if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input))
            if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
        std::sort(out.begin(), out.end());
    } else {
        throw std::runtime_error("input not found: " + input.string());
    }
    if (out.empty()) throw std::runtime_error("no input images in " + input.string());
    return out;
}

// Creates the directory if needed and proves it is writable.
inline void prepare_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot use output directory " + dir.string());
    const fs::path probe = dir / ".uwdepth_write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw std::runtime_error("output directory is not writable: " + dir.string());
    }
    fs::remove(probe, ec);
}

namespace detail {

template <class PerFile>
BatchStatus run_batch(const std::vector<fs::path>& inputs, unsigned threads, PerFile&& per_file) {
    const auto start = std::chrono::steady_clock::now();
    BatchStatus status;
    status.total = inputs.size();
    std::vector<std::string> errors(inputs.size());
    std::vector<char> ok(inputs.size(), 0);
    parallel_for(inputs.size(), threads, [&](std::size_t i) {
        try {
            per_file(inputs[i]);
            ok[i] = 1;
        } catch (const std::exception& e) {
            errors[i] = inputs[i].string() + ": " + e.what();
        }
    });
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (ok[i]) {
            ++status.processed;
        } else {
            spdlog::error("{}", errors[i]);
            status.failures.push_back(errors[i]);
        }
    }
    status.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return status;
}

}  // namespace detail

struct EnhanceOptions {
    fs::path input;
    fs::path output;
    EnhanceConfig config;
    unsigned threads = 1;
};

// Enhances each input and writes <output>/<stem>.png.
inline BatchStatus run_enhance(const EnhanceOptions& opt) {
    opt.config.validate();
    prepare_output_dir(opt.output);
    const auto inputs = list_inputs(opt.input);
    std::mutex write_mutex;
    return detail::run_batch(inputs, opt.threads, [&](const fs::path& in) {
        const Image out = enhance_pipeline(read_image(in), opt.config);
        std::lock_guard lock(write_mutex);
        write_image(opt.output / (in.stem().string() + ".png"), out);
    });
}

struct RmiDumpOptions {
    fs::path input;
    fs::path output;
    GrayFormula gray = GrayFormula::bt601;
    unsigned threads = 1;
};

// Writes <stem>_R.png, <stem>_M.png and <stem>_I.png as 16-bit grayscale.
inline BatchStatus run_rmi_dump(const RmiDumpOptions& opt) {
    prepare_output_dir(opt.output);
    const auto inputs = list_inputs(opt.input);
    std::mutex write_mutex;
    return detail::run_batch(inputs, opt.threads, [&](const fs::path& in) {
        const RmiPlanes rmi = rmi_decompose(read_image(in), opt.gray);
        const std::string stem = in.stem().string();
        std::lock_guard lock(write_mutex);
        write_gray(opt.output / (stem + "_R.png"), rmi.r, 16);
        write_gray(opt.output / (stem + "_M.png"), rmi.m, 16);
        write_gray(opt.output / (stem + "_I.png"), rmi.i, 16);
    });
}

struct FitPriorOptions {
    fs::path root;
    std::string rgb_subdir = "RGB";
    std::string depth_subdir = "depth";
    std::size_t stride = 4;
    bool enhance = false;
    EnhanceConfig config;
    fs::path output;  // coefficient JSON; skipped when empty
    unsigned threads = 1;
};

// Pools (R, M, depth) samples over a set of images, then solves once. The
// per-image sums are merged in input order, so any thread count gives the
// same coefficients.
template <class Loader>
FitReport fit_prior_over(std::size_t count, std::size_t stride, bool enhance, const EnhanceConfig& cfg,
                         unsigned threads, Loader&& load) {
    if (count == 0) throw std::invalid_argument("fit-prior: empty manifest");
    std::vector<NormalEquations> partial(count);
    parallel_for(count, threads, [&](std::size_t i) {
        auto [rgb, depth] = load(i);
        const RmiPlanes rmi = rmi_decompose(enhance ? enhance_pipeline(rgb, cfg) : rgb);
        accumulate_prior(rmi, depth, stride, partial[i]);
    });
    NormalEquations total;
    for (const auto& p : partial) total.merge(p);
    return total.solve();
}

inline FitReport run_fit_prior(const FitPriorOptions& opt) {
    if (opt.stride == 0) throw std::invalid_argument("fit-prior: stride must be >= 1");
    opt.config.validate();
    const Manifest manifest = scan({opt.root, opt.rgb_subdir, opt.depth_subdir, "train"});
    const FitReport report =
        fit_prior_over(manifest.entries.size(), opt.stride, opt.enhance, opt.config, opt.threads, [&](std::size_t i) {
            LoadedPair p = load_pair(manifest.entries[i]);
            return std::pair<Image, DepthMap>{std::move(p.rgb), std::move(p.depth)};
        });
    if (!opt.output.empty()) {
        if (opt.output.has_parent_path()) fs::create_directories(opt.output.parent_path());
        std::ofstream out(opt.output);
        if (!out) throw IoError(opt.output, "cannot open for writing");
        out << nlohmann::json(report).dump(2) << '\n';
    }
    return report;
}

enum class ReportFormat { json, csv };

inline ReportFormat parse_format(const std::string& s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    throw std::invalid_argument("unknown report format '" + s + "' (expected json or csv)");
}

inline void write_set_report(const fs::path& path, const SetReport& report, ReportFormat format) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    if (format == ReportFormat::json)
        out << nlohmann::json(report).dump(2) << '\n';
    else
        write_csv(out, report);
    if (!out) throw IoError(path, "write failed");
}

struct EvaluateOptions {
    fs::path pred_dir;
    fs::path gt_dir;
    fs::path output;  // report path; skipped when empty
    ReportFormat format = ReportFormat::json;
    unsigned threads = 1;
};

// Pairs prediction and ground-truth depth files by stem. Ground-truth zeros
// are invalid; predictions are taken as-is.
inline SetReport run_evaluate(const EvaluateOptions& opt) {
    std::vector<std::string> warnings;
    const auto preds = uwdepth::detail::images_by_stem(opt.pred_dir, warnings);
    const auto gts = uwdepth::detail::images_by_stem(opt.gt_dir, warnings);
    std::vector<std::string> stems;
    for (const auto& [stem, path] : preds) {
        if (gts.contains(stem))
            stems.push_back(stem);
        else
            warnings.push_back("no ground truth for " + path.string());
    }
    for (const auto& [stem, path] : gts)
        if (!preds.contains(stem)) warnings.push_back("no prediction for " + path.string());
    for (const auto& w : warnings) spdlog::warn("evaluate: {}", w);
    if (stems.empty()) throw std::runtime_error("evaluate: no prediction/ground-truth pairs");

    SetReport report;
    report.per_image.resize(stems.size());
    parallel_for(stems.size(), opt.threads, [&](std::size_t i) {
        const DepthMap pred(read_gray(preds.at(stems[i])).plane);
        const DepthMap gt = DepthMap::with_zero_invalid(read_gray(gts.at(stems[i])).plane);
        report.per_image[i] = evaluate_pair(pred, gt, stems[i]);
    });
    report.aggregate = aggregate_reports(report.per_image);
    if (!opt.output.empty()) write_set_report(opt.output, report, opt.format);
    return report;
}

struct DemoOptions {
    std::uint64_t seed = 1;
    std::size_t n = 50;
    fs::path workdir;  // report directory; skipped when empty
    EnhanceConfig config;
    std::size_t stride = 4;
    unsigned threads = 1;
    SyntheticParams synthetic;
};

struct DemoReport {
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    FitReport raw_fit;
    FitReport enhanced_fit;
    MetricReport raw;       // prior fitted and evaluated on raw images
    MetricReport enhanced;  // same, on enhanced images
};

inline void to_json(nlohmann::json& j, const DemoReport& r) {
    auto row = [](const char* input, const MetricReport& m) {
        return nlohmann::json{{"input", input}, {"abs_rel", m.abs_rel}, {"sq_rel", m.sq_rel},
                              {"rmse", m.rmse},  {"log10", m.log10},     {"n_valid", m.n_valid}};
    };
    j = nlohmann::json{{"seed", r.seed},
                       {"n_train", r.n_train},
                       {"n_test", r.n_test},
                       {"rows", {row("raw", r.raw), row("enhanced", r.enhanced)}},
                       {"priors", {{"raw", r.raw_fit}, {"enhanced", r.enhanced_fit}}}};
}

inline void write_demo_csv(std::ostream& os, const DemoReport& r) {
    os << "input,abs_rel,sq_rel,rmse,log10\n";
    for (const auto& [name, m] : {std::pair{"raw", &r.raw}, std::pair{"enhanced", &r.enhanced}})
        os << fmt::format("{},{},{},{},{}\n", name, m->abs_rel, m->sq_rel, m->rmse, m->log10);
}

// Synthetic raw-vs-enhanced comparison: the first n - n/5 images train a
// depth prior on raw and on enhanced RMI planes, the rest evaluate both.
inline DemoReport run_demo(const DemoOptions& opt) {
    if (opt.n == 0) throw std::invalid_argument("demo: n must be >= 1");
    if (opt.stride == 0) throw std::invalid_argument("demo: stride must be >= 1");
    opt.config.validate();
    const auto set = make_synthetic_set(opt.n, opt.seed, opt.synthetic);

    DemoReport report;
    report.seed = opt.seed;
    report.n_test = opt.n == 1 ? 1 : std::max<std::size_t>(1, opt.n / 5);
    report.n_train = opt.n == 1 ? 1 : opt.n - report.n_test;
    const std::size_t test_begin = opt.n == 1 ? 0 : report.n_train;

    std::vector<Image> enhanced(set.size());
    parallel_for(set.size(), opt.threads, [&](std::size_t i) { enhanced[i] = enhance_pipeline(set[i].rgb, opt.config); });

    auto evaluate = [&](bool use_enhanced, FitReport& fit, MetricReport& metrics) {
        auto image_of = [&](std::size_t i) -> const Image& { return use_enhanced ? enhanced[i] : set[i].rgb; };
        fit = fit_prior_over(report.n_train, opt.stride, false, opt.config, opt.threads, [&](std::size_t i) {
            return std::pair<Image, DepthMap>{image_of(i), set[i].depth};
        });
        std::vector<MetricReport> per(report.n_test);
        parallel_for(report.n_test, opt.threads, [&](std::size_t k) {
            const std::size_t i = test_begin + k;
            per[k] = evaluate_pair(predict_prior(rmi_decompose(image_of(i)), fit.coefficients), set[i].depth,
                                   set[i].image_id);
        });
        metrics = aggregate_reports(per, use_enhanced ? "enhanced" : "raw");
    };
    evaluate(false, report.raw_fit, report.raw);
    evaluate(true, report.enhanced_fit, report.enhanced);

    if (!opt.workdir.empty()) {
        prepare_output_dir(opt.workdir);
        {
            std::ofstream out(opt.workdir / "demo_report.json", std::ios::binary);
            out << nlohmann::json(report).dump(2) << '\n';
            if (!out) throw IoError(opt.workdir / "demo_report.json", "write failed");
        }
        std::ofstream out(opt.workdir / "demo_report.csv", std::ios::binary);
        write_demo_csv(out, report);
        if (!out) throw IoError(opt.workdir / "demo_report.csv", "write failed");
    }
    return report;
}

}  // namespace uwdepth::cli
