#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwdepth {

// Single-channel row-major raster of doubles. Default-constructed planes are
// empty (0x0); every other plane has width, height >= 1.
class Plane {
public:
    Plane() = default;

    Plane(std::size_t width, std::size_t height, double fill = 0.0)
        : width_(width), height_(height), samples_(checked_size(width, height), fill) {}

    Plane(std::size_t width, std::size_t height, std::vector<double> samples)
        : width_(width), height_(height), samples_(std::move(samples)) {
        if (samples_.size() != checked_size(width, height))
            throw std::invalid_argument("Plane: sample count does not match width*height");
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }

    double& at(std::size_t x, std::size_t y) { return samples_[y * width_ + x]; }
    double at(std::size_t x, std::size_t y) const { return samples_[y * width_ + x]; }

    double& operator[](std::size_t i) { return samples_[i]; }
    double operator[](std::size_t i) const { return samples_[i]; }

    double* row(std::size_t y) { return samples_.data() + y * width_; }
    const double* row(std::size_t y) const { return samples_.data() + y * width_; }

    std::vector<double>& samples() noexcept { return samples_; }
    const std::vector<double>& samples() const noexcept { return samples_; }

    bool same_shape(const Plane& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    static std::size_t checked_size(std::size_t w, std::size_t h) {
        if (w == 0 || h == 0) throw std::invalid_argument("Plane: width and height must be >= 1");
        return w * h;
    }

    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> samples_;
};

enum class Channel : std::size_t { red = 0, green = 1, blue = 2 };

inline constexpr std::array<Channel, 3> kChannels{Channel::red, Channel::green, Channel::blue};

inline const char* channel_name(Channel c) {
    switch (c) {
    case Channel::red: return "red";
    case Channel::green: return "green";
    case Channel::blue: return "blue";
    }
    return "?";
}

// Planar RGB image with samples in [0,1].
class Image {
public:
    Image() = default;

    Image(std::size_t width, std::size_t height, double fill = 0.0)
        : planes_{Plane(width, height, fill), Plane(width, height, fill), Plane(width, height, fill)} {}

    Image(Plane red, Plane green, Plane blue)
        : planes_{std::move(red), std::move(green), std::move(blue)} {
        if (!planes_[0].same_shape(planes_[1]) || !planes_[0].same_shape(planes_[2]))
            throw std::invalid_argument("Image: channel planes differ in size");
    }

    std::size_t width() const noexcept { return planes_[0].width(); }
    std::size_t height() const noexcept { return planes_[0].height(); }
    std::size_t pixel_count() const noexcept { return planes_[0].size(); }
    bool empty() const noexcept { return planes_[0].empty(); }

    Plane& channel(Channel c) { return planes_[static_cast<std::size_t>(c)]; }
    const Plane& channel(Channel c) const { return planes_[static_cast<std::size_t>(c)]; }

    Plane& red() { return planes_[0]; }
    Plane& green() { return planes_[1]; }
    Plane& blue() { return planes_[2]; }
    const Plane& red() const { return planes_[0]; }
    const Plane& green() const { return planes_[1]; }
    const Plane& blue() const { return planes_[2]; }

    bool same_shape(const Image& other) const noexcept { return planes_[0].same_shape(other.planes_[0]); }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::array<Plane, 3> planes_;
};

inline bool all_finite(const Plane& p) {
    for (double v : p.samples())
        if (!std::isfinite(v)) return false;
    return true;
}

inline bool in_unit_range(const Plane& p) {
    for (double v : p.samples())
        if (!(v >= 0.0 && v <= 1.0)) return false;
    return true;
}

inline bool is_valid(const Image& img) {
    if (img.empty()) return false;
    for (Channel c : kChannels)
        if (!in_unit_range(img.channel(c))) return false;
    return true;
}

inline void require_valid(const Image& img, const char* who) {
    if (!is_valid(img))
        throw std::invalid_argument(std::string(who) + ": image is empty or has samples outside [0,1]");
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace uwdepth
