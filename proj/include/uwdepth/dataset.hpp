#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "uwdepth/depth.hpp"
#include "uwdepth/image_io.hpp"
#include "uwdepth/raster.hpp"

namespace uwdepth {

namespace fs = std::filesystem;

struct ManifestEntry {
    std::string image_id;
    fs::path rgb_path;
    fs::path depth_path;
    std::size_t width = 0;
    std::size_t height = 0;
    std::string split = "train";

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
    std::vector<ManifestEntry> entries;  // sorted by image_id
    std::vector<std::string> warnings;   // skipped files; not serialized
};

struct ScanOptions {
    fs::path root;
    std::string rgb_subdir = "RGB";
    std::string depth_subdir = "depth";
    std::string split = "train";
};

namespace detail {

// stem -> path for every image file directly inside `dir`.
inline std::map<std::string, fs::path> images_by_stem(const fs::path& dir, std::vector<std::string>& warnings) {
    if (!fs::is_directory(dir)) throw IoError(dir, "not a directory");
    std::map<std::string, fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file() || !is_image_file(e.path())) continue;
        const std::string stem = e.path().stem().string();
        auto [it, inserted] = out.emplace(stem, e.path());
        if (!inserted) {
            // Keep the lexicographically smallest path so scans are order independent.
            const fs::path loser = std::max(it->second, e.path());
            it->second = std::min(it->second, e.path());
            warnings.push_back("duplicate stem '" + stem + "', ignoring " + loser.string());
        }
    }
    return out;
}

}  // namespace detail

// Pairs RGB and depth files by shared stem. Unmatched files and pairs whose
// dimensions disagree are skipped with a warning.
inline Manifest scan(const ScanOptions& opt) {
    Manifest m;
    const auto rgb = detail::images_by_stem(opt.root / opt.rgb_subdir, m.warnings);
    const auto depth = detail::images_by_stem(opt.root / opt.depth_subdir, m.warnings);

    for (const auto& [stem, path] : rgb)
        if (!depth.contains(stem)) m.warnings.push_back("no depth for " + path.string());
    for (const auto& [stem, path] : depth)
        if (!rgb.contains(stem)) m.warnings.push_back("no RGB for " + path.string());

    for (const auto& [stem, rgb_path] : rgb) {
        auto it = depth.find(stem);
        if (it == depth.end()) continue;
        try {
            const auto [w, h] = probe_size(rgb_path);
            const auto [dw, dh] = probe_size(it->second);
            if (w != dw || h != dh) {
                m.warnings.push_back("dimension mismatch for '" + stem + "': RGB " + std::to_string(w) + "x" +
                                     std::to_string(h) + ", depth " + std::to_string(dw) + "x" + std::to_string(dh));
                continue;
            }
            m.entries.push_back({stem, rgb_path, it->second, w, h, opt.split});
        } catch (const IoError& e) {
            m.warnings.push_back(e.what());
        }
    }
    for (const auto& w : m.warnings) spdlog::warn("scan: {}", w);
    if (m.entries.empty()) throw std::runtime_error("scan: no RGB/depth pairs under " + opt.root.string());
    return m;
}

inline void to_json(nlohmann::json& j, const ManifestEntry& e) {
    j = nlohmann::json{{"image_id", e.image_id},       {"rgb_path", e.rgb_path.string()},
                       {"depth_path", e.depth_path.string()}, {"width", e.width},
                       {"height", e.height},           {"split", e.split}};
}

inline void from_json(const nlohmann::json& j, ManifestEntry& e) {
    e.image_id = j.at("image_id").get<std::string>();
    e.rgb_path = j.at("rgb_path").get<std::string>();
    e.depth_path = j.at("depth_path").get<std::string>();
    e.width = j.at("width").get<std::size_t>();
    e.height = j.at("height").get<std::size_t>();
    e.split = j.value("split", std::string("train"));
}

inline void to_json(nlohmann::json& j, const Manifest& m) { j = nlohmann::json{{"entries", m.entries}}; }

inline void from_json(const nlohmann::json& j, Manifest& m) {
    m.entries = j.at("entries").get<std::vector<ManifestEntry>>();
    std::set<std::string> ids;
    for (const auto& e : m.entries)
        if (!ids.insert(e.image_id).second) throw std::invalid_argument("manifest: duplicate image_id " + e.image_id);
}

struct LoadedPair {
    Image rgb;
    DepthMap depth;
};

// Depth is normalized by its bit-depth maximum; zero samples are invalid.
inline LoadedPair load_pair(const ManifestEntry& entry) {
    LoadedPair out{read_image(entry.rgb_path), {}};
    GrayRead g = read_gray(entry.depth_path);
    if (!out.rgb.red().same_shape(g.plane))
        throw IoError(entry.depth_path, "depth size differs from " + entry.rgb_path.string());
    out.depth = DepthMap::with_zero_invalid(std::move(g.plane));
    return out;
}

// Parameters of the toy underwater renderer. Each channel is attenuated as
// exp(-beta_c * depth) and mixed with veiling light; red decays fastest.
// Scene depth is absolute (near + span * shape) but the stored
// ground truth is per-image relative depth unless relative_depth is off.
struct SyntheticParams {
    std::size_t width = 160;
    std::size_t height = 120;
    double near_min = 0.15;  // nearest scene plane, drawn per image
    double near_max = 0.55;
    double span_min = 0.2;   // depth extent of the scene, drawn per image
    double span_max = 0.4;
    double beta_red = 3.0;
    double beta_green = 0.8;
    double beta_blue = 0.5;
    double veil_red = 0.08;
    double veil_green = 0.45;
    double veil_blue = 0.55;
    double gain_min = 0.7;  // per-image illumination / exposure
    double gain_max = 1.0;
    double water_jitter = 0.0;  // per-image relative spread of beta and veil (water type)
    bool relative_depth = true;  // ground truth rescaled per image to [relative_floor, 1]
    double relative_floor = 0.1;
    double noise_sigma = 0.01;
    int objects = 3;
};

struct SyntheticSample {
    std::string image_id;
    Image rgb;
    DepthMap depth;
    double scene_mean_depth = 0.0;  // mean absolute depth used for rendering
};

namespace detail {

struct Blob {
    double cx, cy, radius, amplitude;
    double color[3];
};

}  // namespace detail

// Deterministic for a given seed: smooth depth fields (receding floor plus a
// few nearer objects) rendered through the attenuation model above.
inline std::vector<SyntheticSample> make_synthetic_set(std::size_t n, std::uint64_t seed,
                                                       const SyntheticParams& prm = {}) {
    if (n == 0) throw std::invalid_argument("make_synthetic_set: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const std::size_t w = prm.width, h = prm.height;
    const double beta[3] = {prm.beta_red, prm.beta_green, prm.beta_blue};
    const double veil[3] = {prm.veil_red, prm.veil_green, prm.veil_blue};

    std::vector<SyntheticSample> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double near = uniform(prm.near_min, prm.near_max);
        const double span = uniform(prm.span_min, prm.span_max);
        const double gain = uniform(prm.gain_min, prm.gain_max);
        double beta_k[3], veil_k[3];
        for (std::size_t c = 0; c < 3; ++c) {
            beta_k[c] = beta[c] * uniform(1.0 - prm.water_jitter, 1.0 + prm.water_jitter);
            veil_k[c] = clamp01(veil[c] * uniform(1.0 - prm.water_jitter, 1.0 + prm.water_jitter));
        }
        const double floor_color[3] = {uniform(0.5, 0.8), uniform(0.45, 0.75), uniform(0.35, 0.65)};
        const double tex_fx = uniform(2.0, 6.0), tex_fy = uniform(2.0, 6.0), tex_phase = uniform(0.0, 6.283185307);

        std::vector<detail::Blob> blobs(static_cast<std::size_t>(std::max(prm.objects, 0)));
        for (auto& b : blobs) {
            b.cx = uniform(0.1, 0.9);
            b.cy = uniform(0.3, 0.9);
            b.radius = uniform(0.06, 0.18);
            b.amplitude = uniform(0.3, 0.7);
            for (double& c : b.color) c = uniform(0.3, 0.9);
        }

        // Unnormalized shape: 1 at the top (far), 0 at the bottom, objects pull nearer.
        Plane shape(w, h);
        std::vector<double> objw(w * h, 0.0);
        std::vector<std::size_t> owner(w * h, blobs.size());
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const double u = (x + 0.5) / static_cast<double>(w), v = (y + 0.5) / static_cast<double>(h);
                double s = 1.0 - v;
                double best = 0.0;
                for (std::size_t b = 0; b < blobs.size(); ++b) {
                    const double dx = u - blobs[b].cx, dy = v - blobs[b].cy;
                    const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * blobs[b].radius * blobs[b].radius));
                    s -= blobs[b].amplitude * g;
                    if (g > best) {
                        best = g;
                        owner[y * w + x] = b;
                    }
                }
                shape.at(x, y) = s;
                objw[y * w + x] = best;
            }
        const auto [lo_it, hi_it] = std::minmax_element(shape.samples().begin(), shape.samples().end());
        const double lo = *lo_it, range = std::max(*hi_it - lo, 1e-9);

        SyntheticSample sample{fmt::format("syn_{:04d}", k), Image(w, h), DepthMap(w, h)};
        double depth_sum = 0.0;
        std::normal_distribution<double> noise(0.0, prm.noise_sigma);
        for (std::size_t i = 0; i < w * h; ++i) {
            const double rel = (shape[i] - lo) / range;
            const double d = near + span * rel;
            depth_sum += d;
            sample.depth[i] = prm.relative_depth ? prm.relative_floor + (1.0 - prm.relative_floor) * rel : d;
            const std::size_t x = i % w, y = i / w;
            const double tex = 0.1 * std::sin(tex_fx * 6.283185307 * x / static_cast<double>(w) + tex_phase) *
                               std::cos(tex_fy * 6.283185307 * y / static_cast<double>(h));
            for (std::size_t c = 0; c < 3; ++c) {
                double albedo = floor_color[c] + tex;
                if (owner[i] < blobs.size()) {
                    const double mix = std::min(1.0, 2.0 * objw[i]);
                    albedo = (1.0 - mix) * albedo + mix * blobs[owner[i]].color[c];
                }
                const double t = std::exp(-beta_k[c] * d);
                const double radiance = gain * (albedo * t + veil_k[c] * (1.0 - t));
                sample.rgb.channel(static_cast<Channel>(c))[i] = clamp01(radiance + noise(rng));
            }
        }
        sample.scene_mean_depth = depth_sum / static_cast<double>(w * h);
        out.push_back(std::move(sample));
    }
    return out;
}

// Writes `<root>/<rgb_subdir>/<id>.png` (8-bit RGB) and `<root>/<depth_subdir>/<id>.png` (16-bit gray).
inline void write_synthetic_set(const std::vector<SyntheticSample>& set, const fs::path& root,
                                const std::string& rgb_subdir = "RGB", const std::string& depth_subdir = "depth") {
    fs::create_directories(root / rgb_subdir);
    fs::create_directories(root / depth_subdir);
    for (const auto& s : set) {
        write_image(root / rgb_subdir / (s.image_id + ".png"), s.rgb);
        write_gray(root / depth_subdir / (s.image_id + ".png"), s.depth.values(), 16);
    }
}

}  // namespace uwdepth
