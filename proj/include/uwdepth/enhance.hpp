#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "uwdepth/imgproc.hpp"
#include "uwdepth/raster.hpp"

namespace uwdepth {

struct EnhanceConfig {
    double alpha1 = 0.005;  // low quantile level before ratio scaling
    double alpha2 = 0.995;  // high quantile level before ratio scaling
    double blur_sigma = 1.0;
    int blur_radius = 2;

    void validate() const {
        if (!(alpha1 >= 0.0 && alpha1 < alpha2 && alpha2 <= 1.0))
            throw std::invalid_argument("EnhanceConfig: require 0 <= alpha1 < alpha2 <= 1");
        if (!(blur_sigma > 0.0) || !std::isfinite(blur_sigma))
            throw std::invalid_argument("EnhanceConfig: blur_sigma must be > 0");
        if (blur_radius < 1) throw std::invalid_argument("EnhanceConfig: blur_radius must be >= 1");
    }

    friend bool operator==(const EnhanceConfig&, const EnhanceConfig&) = default;
};

// Gray World gains: max channel mean over each channel's mean. The channel
// with the largest mean gets exactly 1.
struct GrayWorldRatios {
    double red = 1.0;
    double blue = 1.0;
    double green = 1.0;

    double of(Channel c) const {
        switch (c) {
        case Channel::red: return red;
        case Channel::green: return green;
        case Channel::blue: return blue;
        }
        return 1.0;
    }
};

// Green-guided compensation of the red and blue channels. Green is untouched.
inline Image compensate(const Image& img) {
    require_valid(img, "compensate");
    const double mean_r = channel_mean(img.red());
    const double mean_g = channel_mean(img.green());
    const double mean_b = channel_mean(img.blue());
    const double dr = mean_g - mean_r;
    const double db = mean_g - mean_b;

    Image out = img;
    auto& r = out.red().samples();
    auto& b = out.blue().samples();
    const auto& g = img.green().samples();
    for (std::size_t i = 0; i < g.size(); ++i) {
        r[i] = clamp01(r[i] + dr * (1.0 - r[i]) * g[i]);
        b[i] = clamp01(b[i] + db * (1.0 - b[i]) * g[i]);
    }
    return out;
}

inline GrayWorldRatios gray_world_ratios(const Image& img) {
    require_valid(img, "gray_world_ratios");
    const double mr = channel_mean(img.red());
    const double mg = channel_mean(img.green());
    const double mb = channel_mean(img.blue());
    if (!(mr > 0.0) || !(mg > 0.0) || !(mb > 0.0))
        throw std::domain_error("gray_world_ratios: a channel has zero mean (all-black channel)");
    const double mx = std::max({mr, mg, mb});
    return {mx / mr, mx / mb, mx / mg};
}

struct ClampResult {
    Plane plane;
    double low = 0.0;   // s1
    double high = 1.0;  // s2
    bool degenerate = false;
};

// Spans narrower than this are treated as a constant channel.
inline constexpr double kDegenerateSpan = 1e-12;

// Quantile clamp then affine stretch so that low -> 0 and high -> 1. The
// quantile levels are alpha * ratio, clamped into [0,1].
inline ClampResult clamp_normalize_channel(const Plane& p, double ratio, const EnhanceConfig& cfg) {
    cfg.validate();
    if (!(ratio > 0.0) || !std::isfinite(ratio))
        throw std::invalid_argument("clamp_normalize_channel: ratio must be positive and finite");
    const double level1 = clamp01(cfg.alpha1 * ratio);
    const double level2 = clamp01(cfg.alpha2 * ratio);
    const auto [s1, s2] = quantile_pair(p, level1, level2);

    ClampResult result;
    result.low = s1;
    result.high = s2;
    if (!(s2 - s1 > kDegenerateSpan)) {
        result.plane = p;
        result.degenerate = true;
        spdlog::warn("clamp_normalize_channel: degenerate thresholds s1={} s2={}, channel passed through", s1, s2);
        return result;
    }
    const double scale = 1.0 / (s2 - s1);
    result.plane = Plane(p.width(), p.height());
    auto& dst = result.plane.samples();
    const auto& src = p.samples();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::clamp(src[i], s1, s2);
        dst[i] = v == s2 ? 1.0 : (v - s1) * scale;
    }
    return result;
}

// Equalizes V in HSV space; H and S are carried through untouched.
inline HsvImage ghe_hsv(const Image& img) {
    require_valid(img, "ghe");
    HsvImage hsv = rgb_to_hsv(img);
    hsv.v = equalize_histogram(hsv.v);
    return hsv;
}

inline Image ghe(const Image& img) { return hsv_to_rgb(ghe_hsv(img)); }

inline Image unsharp(const Image& img, const EnhanceConfig& cfg) {
    require_valid(img, "unsharp");
    cfg.validate();
    Image out(img.width(), img.height());
    for (Channel c : kChannels) {
        const Plane& src = img.channel(c);
        const Plane blurred = gaussian_blur(src, cfg.blur_sigma, cfg.blur_radius);
        auto& dst = out.channel(c).samples();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = clamp01(2.0 * src[i] - blurred[i]);
    }
    return out;
}

inline Image fuse(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("fuse: image dimensions differ");
    Image out(a.width(), a.height());
    for (Channel c : kChannels) {
        const auto& pa = a.channel(c).samples();
        const auto& pb = b.channel(c).samples();
        auto& dst = out.channel(c).samples();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (pa[i] + pb[i]) * 0.5;
    }
    return out;
}

struct EnhanceTrace {
    GrayWorldRatios ratios;
    std::array<ClampResult, 3> clamps;  // indexed by Channel; planes are dropped
};

// compensate -> Gray World ratios -> per-channel clamp/normalize -> {GHE, unsharp} -> fuse
inline Image enhance_pipeline(const Image& img, const EnhanceConfig& cfg, EnhanceTrace* trace = nullptr) {
    cfg.validate();
    const Image compensated = compensate(img);
    const GrayWorldRatios ratios = gray_world_ratios(compensated);

    Image balanced(img.width(), img.height());
    for (Channel c : kChannels) {
        ClampResult res = clamp_normalize_channel(compensated.channel(c), ratios.of(c), cfg);
        balanced.channel(c) = std::move(res.plane);
        if (trace) {
            res.plane = Plane();
            trace->clamps[static_cast<std::size_t>(c)] = std::move(res);
        }
    }
    if (trace) trace->ratios = ratios;

    return fuse(ghe(balanced), unsharp(balanced, cfg));
}

}  // namespace uwdepth
