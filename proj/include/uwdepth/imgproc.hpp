#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "uwdepth/raster.hpp"
#include "uwdepth/summation.hpp"

namespace uwdepth {

// Hue in degrees [0,360), saturation and value in [0,1].
struct HsvImage {
    Plane h;
    Plane s;
    Plane v;

    std::size_t width() const noexcept { return v.width(); }
    std::size_t height() const noexcept { return v.height(); }
};

inline double channel_mean(const Plane& p) {
    if (p.empty()) throw std::invalid_argument("channel_mean: empty plane");
    return pairwise_mean(p.samples());
}

namespace detail {

inline std::size_t quantile_index(std::size_t n, double level) {
    if (!(level >= 0.0 && level <= 1.0))
        throw std::invalid_argument("quantile: level must lie in [0,1]");
    auto idx = static_cast<std::size_t>(std::floor(level * static_cast<double>(n - 1)));
    return std::min(idx, n - 1);
}

}  // namespace detail

// Lower empirical quantile: the sorted sample at floor(level * (n - 1)).
inline double quantile(const Plane& p, double level) {
    if (p.empty()) throw std::invalid_argument("quantile: empty plane");
    const std::size_t k = detail::quantile_index(p.size(), level);
    std::vector<double> work = p.samples();
    std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k), work.end());
    return work[k];
}

// Two quantiles from one copy; low_level <= high_level is not required.
inline std::pair<double, double> quantile_pair(const Plane& p, double low_level, double high_level) {
    if (p.empty()) throw std::invalid_argument("quantile: empty plane");
    std::size_t k1 = detail::quantile_index(p.size(), low_level);
    std::size_t k2 = detail::quantile_index(p.size(), high_level);
    const bool swapped = k1 > k2;
    if (swapped) std::swap(k1, k2);
    std::vector<double> work = p.samples();
    auto first = work.begin();
    std::nth_element(first, first + static_cast<std::ptrdiff_t>(k2), work.end());
    // Everything left of k2 is <= work[k2], so the lower rank lives in that prefix.
    std::nth_element(first, first + static_cast<std::ptrdiff_t>(k1), first + static_cast<std::ptrdiff_t>(k2));
    double q1 = work[k1];
    double q2 = work[k2];
    if (swapped) std::swap(q1, q2);
    return {q1, q2};
}

inline void rgb_to_hsv_pixel(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double c = mx - mn;
    v = mx;
    s = mx > 0.0 ? c / mx : 0.0;
    if (c <= 0.0) {
        h = 0.0;
        return;
    }
    if (mx == r)
        h = 60.0 * ((g - b) / c);
    else if (mx == g)
        h = 60.0 * ((b - r) / c + 2.0);
    else
        h = 60.0 * ((r - g) / c + 4.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
}

inline void hsv_to_rgb_pixel(double h, double s, double v, double& r, double& g, double& b) {
    const double c = v * s;
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    const double m = v - c;
    double r1 = 0, g1 = 0, b1 = 0;
    switch (static_cast<int>(hp) % 6) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
    }
    r = clamp01(r1 + m);
    g = clamp01(g1 + m);
    b = clamp01(b1 + m);
}

inline HsvImage rgb_to_hsv(const Image& img) {
    const std::size_t w = img.width(), h = img.height();
    HsvImage out{Plane(w, h), Plane(w, h), Plane(w, h)};
    const auto& r = img.red().samples();
    const auto& g = img.green().samples();
    const auto& b = img.blue().samples();
    for (std::size_t i = 0; i < r.size(); ++i)
        rgb_to_hsv_pixel(r[i], g[i], b[i], out.h[i], out.s[i], out.v[i]);
    return out;
}

inline Image hsv_to_rgb(const HsvImage& hsv) {
    const std::size_t w = hsv.width(), h = hsv.height();
    Image out(w, h);
    auto& r = out.red().samples();
    auto& g = out.green().samples();
    auto& b = out.blue().samples();
    for (std::size_t i = 0; i < r.size(); ++i)
        hsv_to_rgb_pixel(hsv.h[i], hsv.s[i], hsv.v[i], r[i], g[i], b[i]);
    return out;
}

// Normalized 1-D Gaussian weights for offsets 0..radius (symmetric halves).
inline std::vector<double> gaussian_half_kernel(double sigma, int radius) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
    if (radius < 1) throw std::invalid_argument("gaussian_blur: radius must be >= 1");
    std::vector<double> w(static_cast<std::size_t>(radius) + 1);
    double total = 0.0;
    for (int k = 0; k <= radius; ++k) {
        w[static_cast<std::size_t>(k)] = std::exp(-double(k) * k / (2.0 * sigma * sigma));
        total += (k == 0 ? 1.0 : 2.0) * w[static_cast<std::size_t>(k)];
    }
    for (double& v : w) v /= total;
    return w;
}

// Separable Gaussian blur with edge replication. Each tap is accumulated as a
// difference from the centre sample, so constant regions are reproduced exactly.
inline Plane gaussian_blur(const Plane& p, double sigma, int radius) {
    const std::vector<double> w = gaussian_half_kernel(sigma, radius);
    if (p.empty()) throw std::invalid_argument("gaussian_blur: empty plane");
    const std::size_t width = p.width(), height = p.height();
    const auto r = static_cast<std::size_t>(radius);

    Plane tmp(width, height);
    std::vector<double> padded(width + 2 * r);
    for (std::size_t y = 0; y < height; ++y) {
        const double* src = p.row(y);
        std::fill(padded.begin(), padded.begin() + static_cast<std::ptrdiff_t>(r), src[0]);
        std::copy(src, src + width, padded.begin() + static_cast<std::ptrdiff_t>(r));
        std::fill(padded.end() - static_cast<std::ptrdiff_t>(r), padded.end(), src[width - 1]);
        double* dst = tmp.row(y);
        const double* c = padded.data() + r;
        for (std::size_t x = 0; x < width; ++x) {
            const double centre = c[x];
            double acc = 0.0;
            for (std::size_t k = 1; k <= r; ++k) acc += w[k] * ((c[x - k] - centre) + (c[x + k] - centre));
            dst[x] = centre + acc;
        }
    }

    Plane out(width, height);
    std::vector<const double*> below(r + 1), above(r + 1);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t k = 1; k <= r; ++k) {
            below[k] = tmp.row(y >= k ? y - k : 0);
            above[k] = tmp.row(std::min(y + k, height - 1));
        }
        const double* centre = tmp.row(y);
        double* dst = out.row(y);
        for (std::size_t x = 0; x < width; ++x) {
            double acc = 0.0;
            for (std::size_t k = 1; k <= r; ++k)
                acc += w[k] * ((below[k][x] - centre[x]) + (above[k][x] - centre[x]));
            dst[x] = centre[x] + acc;
        }
    }
    return out;
}

inline constexpr int kHistogramLevels = 256;

inline int quantize_level(double v) {
    const long level = std::lround(clamp01(v) * (kHistogramLevels - 1));
    return static_cast<int>(level);
}

// Global histogram equalization over 256 levels. A plane whose samples all
// fall in one level is returned unchanged.
inline Plane equalize_histogram(const Plane& p) {
    if (p.empty()) throw std::invalid_argument("equalize_histogram: empty plane");
    std::array<std::size_t, kHistogramLevels> hist{};
    for (double v : p.samples()) ++hist[static_cast<std::size_t>(quantize_level(v))];

    std::array<std::size_t, kHistogramLevels> cdf{};
    std::size_t running = 0;
    for (std::size_t l = 0; l < hist.size(); ++l) cdf[l] = running += hist[l];
    const std::size_t n = p.size();
    std::size_t cdf_min = 0;
    for (std::size_t l = 0; l < hist.size(); ++l)
        if (hist[l] != 0) {
            cdf_min = cdf[l];
            break;
        }
    if (n <= cdf_min) return p;

    std::array<double, kHistogramLevels> lut{};
    const double denom = static_cast<double>(n - cdf_min);
    for (std::size_t l = 0; l < lut.size(); ++l)
        lut[l] = cdf[l] >= cdf_min ? static_cast<double>(cdf[l] - cdf_min) / denom : 0.0;

    Plane out(p.width(), p.height());
    for (std::size_t i = 0; i < n; ++i) out[i] = lut[static_cast<std::size_t>(quantize_level(p[i]))];
    return out;
}

}  // namespace uwdepth
