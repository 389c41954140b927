#pragma once

#include <algorithm>

#include "uwdepth/raster.hpp"

namespace uwdepth {

// R = red, M = max(green, blue), I = gray intensity.
struct RmiPlanes {
    Plane r;
    Plane m;
    Plane i;

    std::size_t width() const noexcept { return r.width(); }
    std::size_t height() const noexcept { return r.height(); }
};

enum class GrayFormula { bt601, mean };

inline RmiPlanes rmi_decompose(const Image& img, GrayFormula gray = GrayFormula::bt601) {
    require_valid(img, "rmi_decompose");
    const std::size_t w = img.width(), h = img.height();
    RmiPlanes out{img.red(), Plane(w, h), Plane(w, h)};
    const auto& r = img.red().samples();
    const auto& g = img.green().samples();
    const auto& b = img.blue().samples();
    for (std::size_t k = 0; k < r.size(); ++k) {
        out.m[k] = std::max(g[k], b[k]);
        const double y = gray == GrayFormula::bt601 ? 0.299 * r[k] + 0.587 * g[k] + 0.114 * b[k]
                                                    : (r[k] + g[k] + b[k]) / 3.0;
        // Keep the convex combination inside [min, max] despite rounding.
        out.i[k] = std::clamp(y, std::min({r[k], g[k], b[k]}), std::max({r[k], g[k], b[k]}));
    }
    return out;
}

}  // namespace uwdepth
