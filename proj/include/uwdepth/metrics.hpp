#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "uwdepth/depth.hpp"
#include "uwdepth/summation.hpp"

namespace uwdepth {

struct MetricReport {
    std::string image_id;
    double abs_rel = 0.0;
    double sq_rel = 0.0;
    double rmse = 0.0;
    double log10 = 0.0;
    std::size_t n_valid = 0;
};

struct SetReport {
    MetricReport aggregate;
    std::vector<MetricReport> per_image;
};

struct EvalPair {
    std::string image_id;
    DepthMap pred;
    DepthMap gt;
};

// Floor on the prediction inside the log10 term.
inline constexpr double kLog10PredFloor = 1e-6;

// Abs Rel, Sq Rel, RMSE and log10 error over pixels valid in both maps with
// gt > 0. Relative terms divide by the per-pixel ground truth.
inline MetricReport evaluate_pair(const DepthMap& pred, const DepthMap& gt, std::string image_id = {}) {
    if (!pred.same_shape(gt) || gt.size() == 0) throw std::invalid_argument("evaluate_pair: depth maps differ in size");
    const std::size_t n = gt.size();
    std::vector<double> abs_rel, sq_rel, sq, lg;
    abs_rel.reserve(n);
    sq_rel.reserve(n);
    sq.reserve(n);
    lg.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!pred.valid(i) || !gt.valid(i) || !(gt[i] > 0.0)) continue;
        const double d = gt[i];
        const double e = d - pred[i];
        abs_rel.push_back(std::abs(e) / d);
        sq_rel.push_back(e * e / d);
        sq.push_back(e * e);
        lg.push_back(std::abs(std::log10(d) - std::log10(std::max(pred[i], kLog10PredFloor))));
    }
    if (sq.empty()) throw std::domain_error("evaluate_pair: no valid pixels" + (image_id.empty() ? "" : " in " + image_id));

    MetricReport r;
    r.image_id = std::move(image_id);
    r.abs_rel = pairwise_mean(abs_rel);
    r.sq_rel = pairwise_mean(sq_rel);
    r.rmse = std::sqrt(pairwise_mean(sq));
    r.log10 = pairwise_mean(lg);
    r.n_valid = sq.size();
    return r;
}

// Unweighted mean over images; n_valid is the total pixel count.
inline MetricReport aggregate_reports(std::span<const MetricReport> reports, std::string id = "aggregate") {
    if (reports.empty()) throw std::invalid_argument("evaluate_set: empty set");
    std::vector<double> a, s, r, l;
    MetricReport agg;
    agg.image_id = std::move(id);
    for (const auto& rep : reports) {
        a.push_back(rep.abs_rel);
        s.push_back(rep.sq_rel);
        r.push_back(rep.rmse);
        l.push_back(rep.log10);
        agg.n_valid += rep.n_valid;
    }
    agg.abs_rel = pairwise_mean(a);
    agg.sq_rel = pairwise_mean(s);
    agg.rmse = pairwise_mean(r);
    agg.log10 = pairwise_mean(l);
    return agg;
}

inline SetReport evaluate_set(std::span<const EvalPair> pairs) {
    if (pairs.empty()) throw std::invalid_argument("evaluate_set: empty set");
    SetReport out;
    out.per_image.reserve(pairs.size());
    for (const auto& p : pairs) out.per_image.push_back(evaluate_pair(p.pred, p.gt, p.image_id));
    out.aggregate = aggregate_reports(out.per_image);
    return out;
}

inline void to_json(nlohmann::json& j, const MetricReport& r) {
    j = nlohmann::json{{"image_id", r.image_id}, {"abs_rel", r.abs_rel}, {"sq_rel", r.sq_rel},
                       {"rmse", r.rmse},         {"log10", r.log10},     {"n_valid", r.n_valid}};
}

inline void from_json(const nlohmann::json& j, MetricReport& r) {
    r.image_id = j.at("image_id").get<std::string>();
    r.abs_rel = j.at("abs_rel").get<double>();
    r.sq_rel = j.at("sq_rel").get<double>();
    r.rmse = j.at("rmse").get<double>();
    r.log10 = j.at("log10").get<double>();
    r.n_valid = j.at("n_valid").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const SetReport& r) {
    j = nlohmann::json{{"per_image", r.per_image}, {"aggregate", r.aggregate}};
}

inline constexpr const char* kMetricCsvHeader = "image_id,abs_rel,sq_rel,rmse,log10,n_valid";

// Numbers use the shortest round-trip representation, same as the JSON writer.
inline std::string csv_row(const MetricReport& r) {
    return fmt::format("{},{},{},{},{},{}", r.image_id, r.abs_rel, r.sq_rel, r.rmse, r.log10, r.n_valid);
}

inline void write_csv(std::ostream& os, const SetReport& report) {
    os << kMetricCsvHeader << '\n';
    for (const auto& r : report.per_image) os << csv_row(r) << '\n';
    os << csv_row(report.aggregate) << '\n';
}

// Console form: six significant digits.
inline std::string summary_line(const MetricReport& r) {
    return fmt::format("{}: abs_rel={:.6g} sq_rel={:.6g} rmse={:.6g} log10={:.6g} n_valid={}", r.image_id, r.abs_rel,
                       r.sq_rel, r.rmse, r.log10, r.n_valid);
}

}  // namespace uwdepth
