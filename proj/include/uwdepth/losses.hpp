#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwdepth/depth.hpp"
#include "uwdepth/prior.hpp"
#include "uwdepth/summation.hpp"

namespace uwdepth {

struct LossWeights {
    double delta_chi2 = 0.3;
    double delta_data = 0.6;
    double delta_domain = 0.1;
    double lambda = 0.85;  // scale-invariance balance of the data loss
    double alpha = 10.0;   // data loss scale

    void validate() const {
        for (double v : {delta_chi2, delta_data, delta_domain, lambda, alpha})
            if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("LossWeights: weights must be >= 0");
    }
};

// Floor applied to depths before taking logs.
inline constexpr double kLogDepthFloor = 1e-6;

namespace detail {

// Indices of pixels valid in both maps.
inline std::vector<std::size_t> joint_valid(const DepthMap& pred, const DepthMap& gt, const char* who) {
    if (!pred.same_shape(gt) || pred.size() == 0)
        throw std::invalid_argument(std::string(who) + ": depth maps differ in size");
    std::vector<std::size_t> idx;
    idx.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred.valid(i) && gt.valid(i)) idx.push_back(i);
    if (idx.empty()) throw std::domain_error(std::string(who) + ": no jointly valid pixels");
    return idx;
}

struct LogResiduals {
    std::vector<std::size_t> idx;
    std::vector<double> t;
    double mean_t = 0.0;
    double mean_t2 = 0.0;
    double inner = 0.0;  // mean(t^2) - lambda * mean(t)^2 before flooring
};

inline LogResiduals log_residuals(const DepthMap& pred, const DepthMap& gt, double lambda) {
    LogResiduals r;
    r.idx = joint_valid(pred, gt, "loss_data");
    r.t.resize(r.idx.size());
    std::vector<double> t2(r.idx.size());
    for (std::size_t k = 0; k < r.idx.size(); ++k) {
        const std::size_t i = r.idx[k];
        r.t[k] = std::log(std::max(pred[i], kLogDepthFloor)) - std::log(std::max(gt[i], kLogDepthFloor));
        t2[k] = r.t[k] * r.t[k];
    }
    r.mean_t = pairwise_mean(r.t);
    r.mean_t2 = pairwise_mean(t2);
    r.inner = r.mean_t2 - lambda * r.mean_t * r.mean_t;
    return r;
}

}  // namespace detail

// Mean squared error over jointly valid pixels.
inline double loss_chi2(const DepthMap& pred, const DepthMap& gt) {
    const auto idx = detail::joint_valid(pred, gt, "loss_chi2");
    std::vector<double> sq(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double e = gt[idx[k]] - pred[idx[k]];
        sq[k] = e * e;
    }
    return pairwise_mean(sq);
}

inline std::vector<double> loss_chi2_grad(const DepthMap& pred, const DepthMap& gt) {
    const auto idx = detail::joint_valid(pred, gt, "loss_chi2");
    std::vector<double> g(pred.size(), 0.0);
    const double n = static_cast<double>(idx.size());
    for (std::size_t i : idx) g[i] = 2.0 * (pred[i] - gt[i]) / n;
    return g;
}

// Scale-dampened log loss: alpha * sqrt(mean(t^2) - lambda * mean(t)^2),
// t = log(pred) - log(gt).
inline double loss_data(const DepthMap& pred, const DepthMap& gt, const LossWeights& w = {}) {
    w.validate();
    const auto r = detail::log_residuals(pred, gt, w.lambda);
    return w.alpha * std::sqrt(std::max(0.0, r.inner));
}

inline std::vector<double> loss_data_grad(const DepthMap& pred, const DepthMap& gt, const LossWeights& w = {}) {
    w.validate();
    const auto r = detail::log_residuals(pred, gt, w.lambda);
    if (!(r.inner > 0.0)) throw std::domain_error("loss_data: not differentiable where the inner term is zero");
    const double n = static_cast<double>(r.idx.size());
    const double outer = w.alpha / (2.0 * std::sqrt(r.inner));
    std::vector<double> g(pred.size(), 0.0);
    for (std::size_t k = 0; k < r.idx.size(); ++k) {
        const std::size_t i = r.idx[k];
        if (pred[i] <= kLogDepthFloor) continue;  // floored: flat in pred
        const double d_inner = (2.0 * r.t[k] - 2.0 * w.lambda * r.mean_t) / n;
        g[i] = outer * d_inner / pred[i];
    }
    return g;
}

struct LossBreakdown {
    double chi2 = 0.0;
    double data = 0.0;
    double domain = 0.0;
    double total = 0.0;
};

inline LossBreakdown combine_losses(double chi2, double data, double domain, const LossWeights& w = {}) {
    w.validate();
    return {chi2, data, domain, w.delta_chi2 * chi2 + w.delta_data * data + w.delta_domain * domain};
}

inline LossBreakdown loss_total(const DepthMap& pred, const DepthMap& gt, const DepthMap& prior,
                                const LossWeights& w = {}) {
    return combine_losses(loss_chi2(pred, gt), loss_data(pred, gt, w), domain_loss(prior, pred), w);
}

enum class LossKind { chi2, data, domain };

inline const char* loss_name(LossKind k) {
    switch (k) {
    case LossKind::chi2: return "chi2";
    case LossKind::data: return "data";
    case LossKind::domain: return "domain";
    }
    return "?";
}

namespace detail {

// Norm-wise relative deviation: max |a_i - b_i| over max(|a_i|, |b_i|).
// Per-component ratios are meaningless for partials that are ~0.
struct DeviationTracker {
    double worst_abs = 0.0;
    double scale = 0.0;

    void add(double analytic, double numeric) {
        worst_abs = std::max(worst_abs, std::abs(analytic - numeric));
        scale = std::max({scale, std::abs(analytic), std::abs(numeric)});
    }
    double relative() const { return scale > 0.0 ? worst_abs / scale : worst_abs; }
};

}  // namespace detail

// Norm-wise relative deviation between the analytic gradient of `kind` with
// respect to pred and central finite differences of step h. `target` is the
// ground truth (chi2, data) or the prior map (domain).
inline double grad_check(LossKind kind, const DepthMap& pred, const DepthMap& target, const LossWeights& w = {},
                         double h = 1e-5) {
    std::function<double(const DepthMap&)> value;
    std::vector<double> analytic;
    switch (kind) {
    case LossKind::chi2:
        value = [&](const DepthMap& p) { return loss_chi2(p, target); };
        analytic = loss_chi2_grad(pred, target);
        break;
    case LossKind::data:
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred.valid(i) && target.valid(i) && pred[i] - h <= kLogDepthFloor)
                throw std::domain_error("grad_check: prediction too close to the log floor");
        value = [&](const DepthMap& p) { return loss_data(p, target, w); };
        analytic = loss_data_grad(pred, target, w);
        break;
    case LossKind::domain:
        value = [&](const DepthMap& p) { return domain_loss(target, p); };
        analytic = domain_loss_grad(target, pred);
        break;
    }

    detail::DeviationTracker dev;
    DepthMap probe = pred;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double x0 = pred[i];
        probe[i] = x0 + h;
        const double up = value(probe);
        probe[i] = x0 - h;
        const double down = value(probe);
        probe[i] = x0;
        dev.add(analytic[i], (up - down) / (2.0 * h));
    }
    return dev.relative();
}

// Same check for the bin reconstruction: every partial derivative
// d(depth_p)/d(score_{p,k}) against central differences.
inline double grad_check_reconstruct(const BinSpec& bins, const ScoreVolume& scores, double h = 1e-5) {
    const ScoreVolume analytic = reconstruct_depth_partials(bins, scores);
    const double lo = bins.centers.front(), hi = bins.centers.back();
    const DepthMap base_depth = reconstruct_depth(bins, scores);
    ScoreVolume probe = scores;
    detail::DeviationTracker dev;
    for (std::size_t p = 0; p < scores.pixel_count(); ++p) {
        const double base = base_depth[p];
        if (bins.size() > 1 && (base <= lo || base >= hi))
            throw std::domain_error("grad_check_reconstruct: pixel saturated at a bin center bound");
        for (std::size_t k = 0; k < scores.bins; ++k) {
            double& s = probe.scores[p * scores.bins + k];
            const double s0 = s;
            s = s0 + h;
            const double up = reconstruct_depth(bins, probe)[p];
            s = s0 - h;
            const double down = reconstruct_depth(bins, probe)[p];
            s = s0;
            dev.add(analytic.pixel(p)[k], (up - down) / (2.0 * h));
        }
    }
    return dev.relative();
}

}  // namespace uwdepth
