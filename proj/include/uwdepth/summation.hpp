#pragma once

#include <cstddef>
#include <span>

namespace uwdepth {

// Pairwise (cascade) summation. Error grows as O(log n) instead of O(n), and
// the result depends only on the input order, never on threading.
inline double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t kBlock = 64;
    if (values.size() <= kBlock) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double pairwise_mean(std::span<const double> values) {
    return pairwise_sum(values) / static_cast<double>(values.size());
}

}  // namespace uwdepth
