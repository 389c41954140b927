#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "uwdepth/raster.hpp"

namespace uwdepth {

// Per-pixel depth with a validity mask. Valid pixels hold finite values >= 0.
class DepthMap {
public:
    DepthMap() = default;

    DepthMap(std::size_t width, std::size_t height, double fill = 0.0)
        : values_(width, height, fill), mask_(values_.size(), 1) {}

    explicit DepthMap(Plane values) : values_(std::move(values)), mask_(values_.size(), 1) {}

    DepthMap(Plane values, std::vector<std::uint8_t> mask) : values_(std::move(values)), mask_(std::move(mask)) {
        if (mask_.size() != values_.size()) throw std::invalid_argument("DepthMap: mask size mismatch");
    }

    // Zero samples are marked invalid.
    static DepthMap with_zero_invalid(Plane values) {
        DepthMap d(std::move(values));
        for (std::size_t i = 0; i < d.size(); ++i) d.mask_[i] = d.values_[i] > 0.0 ? 1 : 0;
        return d;
    }

    std::size_t width() const noexcept { return values_.width(); }
    std::size_t height() const noexcept { return values_.height(); }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    bool valid(std::size_t i) const { return mask_[i] != 0; }
    void set_valid(std::size_t i, bool v) { mask_[i] = v ? 1 : 0; }

    Plane& values() noexcept { return values_; }
    const Plane& values() const noexcept { return values_; }
    const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }

    std::size_t valid_count() const {
        return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
    }

    bool same_shape(const DepthMap& other) const noexcept { return values_.same_shape(other.values_); }

    bool is_consistent() const {
        for (std::size_t i = 0; i < size(); ++i)
            if (valid(i) && !(std::isfinite(values_[i]) && values_[i] >= 0.0)) return false;
        return true;
    }

    friend bool operator==(const DepthMap&, const DepthMap&) = default;

private:
    Plane values_;
    std::vector<std::uint8_t> mask_;
};

struct BinSpec {
    std::vector<double> centers;  // strictly increasing

    std::size_t size() const noexcept { return centers.size(); }

    void validate() const {
        if (centers.empty()) throw std::invalid_argument("BinSpec: need at least one center");
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (!std::isfinite(centers[k])) throw std::invalid_argument("BinSpec: non-finite center");
            if (k > 0 && !(centers[k] > centers[k - 1]))
                throw std::invalid_argument("BinSpec: centers must be strictly increasing");
        }
    }
};

// Logits laid out pixel-major: scores[pixel * bins + k].
struct ScoreVolume {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t bins = 0;
    std::vector<double> scores;

    ScoreVolume() = default;
    ScoreVolume(std::size_t w, std::size_t h, std::size_t k, double fill = 0.0)
        : width(w), height(h), bins(k), scores(w * h * k, fill) {}

    std::size_t pixel_count() const noexcept { return width * height; }
    std::span<double> pixel(std::size_t p) { return {scores.data() + p * bins, bins}; }
    std::span<const double> pixel(std::size_t p) const { return {scores.data() + p * bins, bins}; }
};

// Normalizes widths to sum 1 and places each center mid-bin inside [d_min, d_max].
inline BinSpec bin_centers(std::span<const double> widths, double d_min, double d_max) {
    if (widths.empty()) throw std::invalid_argument("bin_centers: no widths");
    if (!(d_min < d_max)) throw std::invalid_argument("bin_centers: require d_min < d_max");
    double total = 0.0;
    for (double w : widths) {
        if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("bin_centers: widths must be positive");
        total += w;
    }
    BinSpec spec;
    spec.centers.reserve(widths.size());
    double cum = 0.0;
    for (double w : widths) {
        const double nw = w / total;
        cum += nw;
        spec.centers.push_back(d_min + (cum - nw / 2.0) * (d_max - d_min));
    }
    spec.validate();
    return spec;
}

namespace detail {

inline void check_volume(const BinSpec& bins, const ScoreVolume& scores) {
    bins.validate();
    if (scores.bins != bins.size()) throw std::invalid_argument("reconstruct_depth: bin count mismatch");
    if (scores.scores.size() != scores.pixel_count() * scores.bins || scores.pixel_count() == 0)
        throw std::invalid_argument("reconstruct_depth: malformed score volume");
}

// Stable softmax into `weights`.
inline void softmax(std::span<const double> logits, std::span<double> weights) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) total += weights[k] = std::exp(logits[k] - mx);
    for (double& w : weights) w /= total;
}

}  // namespace detail

// Softmax-weighted combination of bin centers per pixel.
inline DepthMap reconstruct_depth(const BinSpec& bins, const ScoreVolume& scores) {
    detail::check_volume(bins, scores);
    const double lo = bins.centers.front(), hi = bins.centers.back();
    DepthMap out(scores.width, scores.height);
    std::vector<double> weights(bins.size());
    for (std::size_t p = 0; p < scores.pixel_count(); ++p) {
        detail::softmax(scores.pixel(p), weights);
        double d = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) d += bins.centers[k] * weights[k];
        out[p] = std::clamp(d, lo, hi);
    }
    return out;
}

// d(depth_p)/d(score_{p,k}) = w_k (c_k - depth_p), same layout as the volume.
inline ScoreVolume reconstruct_depth_partials(const BinSpec& bins, const ScoreVolume& scores) {
    detail::check_volume(bins, scores);
    ScoreVolume out(scores.width, scores.height, scores.bins);
    std::vector<double> weights(bins.size());
    for (std::size_t p = 0; p < scores.pixel_count(); ++p) {
        detail::softmax(scores.pixel(p), weights);
        double d = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) d += bins.centers[k] * weights[k];
        auto dst = out.pixel(p);
        for (std::size_t k = 0; k < weights.size(); ++k) dst[k] = weights[k] * (bins.centers[k] - d);
    }
    return out;
}

// Directional derivative of the reconstruction along `direction` (volume layout).
inline Plane reconstruct_depth_jvp(const BinSpec& bins, const ScoreVolume& scores,
                                   std::span<const double> direction) {
    if (direction.size() != scores.scores.size())
        throw std::invalid_argument("reconstruct_depth_jvp: direction size mismatch");
    const ScoreVolume partials = reconstruct_depth_partials(bins, scores);
    Plane out(scores.width, scores.height);
    for (std::size_t p = 0; p < scores.pixel_count(); ++p) {
        double acc = 0.0;
        auto dp = partials.pixel(p);
        for (std::size_t k = 0; k < scores.bins; ++k) acc += dp[k] * direction[p * scores.bins + k];
        out[p] = acc;
    }
    return out;
}

}  // namespace uwdepth
