#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwdepth/raster.hpp"

namespace uwdepth {

class IoError : public std::runtime_error {
public:
    IoError(const std::filesystem::path& path, const std::string& what)
        : std::runtime_error(path.string() + ": " + what), path_(path) {}
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

// Decoded raster before normalization: interleaved samples, 1 or 3 channels.
struct RawRaster {
    std::size_t width = 0;
    std::size_t height = 0;
    int channels = 0;
    int bit_depth = 8;  // 8 or 16
    std::vector<std::uint16_t> samples;

    double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError(path, "cannot open file");
    return f;
}

inline void png_error_handler(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<char*>(png_get_error_ptr(png));
    if (buf) std::snprintf(buf, 256, "%s", msg);
    std::longjmp(png_jmpbuf(png), 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

// All libpng calls live in this function; only trivially destructible locals
// are live across setjmp. Returns false and fills `err` on failure.
inline bool png_decode(std::FILE* fp, bool header_only, RawRaster& out, std::vector<png_byte>& rows,
                       std::vector<png_bytep>& ptrs, char* err) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, err, png_error_handler, png_warning_handler);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    out.width = w;
    out.height = h;
    out.bit_depth = depth == 16 ? 16 : 8;
    out.channels = (color & PNG_COLOR_MASK_COLOR) ? 3 : 1;
    if (header_only) {
        png_destroy_read_struct(&png, &info, nullptr);
        return true;
    }

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (depth == 16) png_set_swap(png);  // host little-endian 16-bit samples
    png_read_update_info(png, info);

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    const int channels = png_get_channels(png, info);
    out.channels = channels;
    rows.resize(rowbytes * h);
    ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) ptrs[y] = rows.data() + y * rowbytes;
    png_read_image(png, ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

inline RawRaster read_png_raw(const std::filesystem::path& path, bool header_only = false) {
    FilePtr fp = open_file(path, "rb");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) throw IoError(path, "not a PNG file");
    std::rewind(fp.get());

    RawRaster raw;
    std::vector<png_byte> rows;
    std::vector<png_bytep> ptrs;
    char err[256] = "corrupt PNG data";
    if (!png_decode(fp.get(), header_only, raw, rows, ptrs, err)) throw IoError(path, err);
    if (header_only) return raw;
    if (raw.channels != 1 && raw.channels != 3) throw IoError(path, "unsupported channel layout");

    const std::size_t count = raw.width * raw.height * static_cast<std::size_t>(raw.channels);
    raw.samples.resize(count);
    if (raw.bit_depth == 16) {
        for (std::size_t i = 0; i < count; ++i)
            raw.samples[i] = static_cast<std::uint16_t>(rows[2 * i] | (rows[2 * i + 1] << 8));
    } else {
        for (std::size_t i = 0; i < count; ++i) raw.samples[i] = rows[i];
    }
    return raw;
}

inline bool png_encode(std::FILE* fp, const RawRaster& raw, std::vector<png_bytep>& ptrs, char* err) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err, png_error_handler, png_warning_handler);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(raw.width), static_cast<png_uint_32>(raw.height), raw.bit_depth,
                 raw.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (raw.bit_depth == 16) png_set_swap(png);
    png_write_image(png, ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

inline void write_png_raw(const std::filesystem::path& path, const RawRaster& raw) {
    const std::size_t bytes_per_sample = raw.bit_depth == 16 ? 2 : 1;
    const std::size_t rowbytes = raw.width * static_cast<std::size_t>(raw.channels) * bytes_per_sample;
    std::vector<png_byte> buf(rowbytes * raw.height);
    for (std::size_t i = 0; i < raw.samples.size(); ++i) {
        if (bytes_per_sample == 2) {
            buf[2 * i] = static_cast<png_byte>(raw.samples[i] & 0xff);
            buf[2 * i + 1] = static_cast<png_byte>(raw.samples[i] >> 8);
        } else {
            buf[i] = static_cast<png_byte>(raw.samples[i]);
        }
    }
    std::vector<png_bytep> ptrs(raw.height);
    for (std::size_t y = 0; y < raw.height; ++y) ptrs[y] = buf.data() + y * rowbytes;
    FilePtr fp = open_file(path, "wb");
    char err[256] = "PNG encoding failed";
    if (!png_encode(fp.get(), raw, ptrs, err)) throw IoError(path, err);
    if (std::fflush(fp.get()) != 0) throw IoError(path, "write failed");
}

inline void skip_pnm_space(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string ignored;
            std::getline(in, ignored);
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            in.get();
        } else {
            return;
        }
    }
}

inline RawRaster read_pnm_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open file");
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (!in || (magic != "P6" && magic != "P5")) throw IoError(path, "not a binary PPM/PGM file");
    long w = 0, h = 0, maxval = 0;
    skip_pnm_space(in);
    in >> w;
    skip_pnm_space(in);
    in >> h;
    skip_pnm_space(in);
    in >> maxval;
    if (!in || w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw IoError(path, "bad PNM header");
    in.get();  // single whitespace before the raster

    RawRaster raw;
    raw.width = static_cast<std::size_t>(w);
    raw.height = static_cast<std::size_t>(h);
    raw.channels = magic == "P6" ? 3 : 1;
    raw.bit_depth = maxval > 255 ? 16 : 8;
    const std::size_t count = raw.width * raw.height * static_cast<std::size_t>(raw.channels);
    const std::size_t bps = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> bytes(count * bps);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw IoError(path, "truncated PNM raster");
    raw.samples.resize(count);
    // Rescale to the full 8/16-bit range when maxval is unusual.
    const double target = raw.max_value();
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned v = bps == 2 ? (bytes[2 * i] << 8) | bytes[2 * i + 1] : bytes[i];
        raw.samples[i] = maxval == static_cast<long>(target)
                             ? static_cast<std::uint16_t>(v)
                             : static_cast<std::uint16_t>(std::lround(v * target / static_cast<double>(maxval)));
    }
    return raw;
}

inline void write_pnm_raw(const std::filesystem::path& path, const RawRaster& raw) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open file for writing");
    out << (raw.channels == 3 ? "P6" : "P5") << '\n'
        << raw.width << ' ' << raw.height << '\n'
        << (raw.bit_depth == 16 ? 65535 : 255) << '\n';
    std::vector<unsigned char> bytes;
    bytes.reserve(raw.samples.size() * 2);
    for (std::uint16_t v : raw.samples) {
        if (raw.bit_depth == 16) bytes.push_back(static_cast<unsigned char>(v >> 8));
        bytes.push_back(static_cast<unsigned char>(v & 0xff));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path, "write failed");
}

inline bool has_extension(const std::filesystem::path& p, std::initializer_list<const char*> exts) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::any_of(exts.begin(), exts.end(), [&](const char* x) { return e == x; });
}

// Grayscale PFM ("Pf"): float32 samples, rows stored bottom to top, byte
// order given by the sign of the scale field.
inline Plane read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open file");
    std::string magic;
    long w = 0, h = 0;
    double scale = 0.0;
    in >> magic >> w >> h >> scale;
    if (!in || magic != "Pf" || w <= 0 || h <= 0 || scale == 0.0) throw IoError(path, "bad PFM header");
    in.get();
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<unsigned char> bytes(n * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw IoError(path, "truncated PFM raster");
    const bool little = scale < 0.0;
    Plane p(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
    for (std::size_t y = 0; y < p.height(); ++y)
        for (std::size_t x = 0; x < p.width(); ++x) {
            const unsigned char* b = bytes.data() + 4 * ((p.height() - 1 - y) * p.width() + x);
            const std::uint32_t u = little ? (std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
                                              std::uint32_t(b[3]) << 24)
                                           : (std::uint32_t(b[3]) | std::uint32_t(b[2]) << 8 | std::uint32_t(b[1]) << 16 |
                                              std::uint32_t(b[0]) << 24);
            float f;
            std::memcpy(&f, &u, sizeof f);
            p.at(x, y) = f;
        }
    return p;
}

inline void write_pfm(const std::filesystem::path& path, const Plane& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open file for writing");
    out << "Pf\n" << p.width() << ' ' << p.height() << "\n-1.0\n";
    std::vector<unsigned char> bytes(p.size() * 4);
    for (std::size_t y = 0; y < p.height(); ++y)
        for (std::size_t x = 0; x < p.width(); ++x) {
            const float f = static_cast<float>(p.at(x, y));
            std::uint32_t u;
            std::memcpy(&u, &f, sizeof u);
            unsigned char* b = bytes.data() + 4 * ((p.height() - 1 - y) * p.width() + x);
            for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(u >> (8 * k));
        }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path, "write failed");
}

inline RawRaster read_raw(const std::filesystem::path& path) {
    if (has_extension(path, {".pfm"})) throw IoError(path, "PFM holds float depth, not an integer raster");
    if (has_extension(path, {".ppm", ".pgm", ".pnm"})) return read_pnm_raw(path);
    return read_png_raw(path);
}

inline std::uint16_t quantize(double v, double max_value) {
    return static_cast<std::uint16_t>(std::lround(clamp01(v) * max_value));
}

}  // namespace detail

inline bool is_image_file(const std::filesystem::path& p) {
    return detail::has_extension(p, {".png", ".ppm", ".pgm", ".pnm", ".pfm"});
}

// Width and height without decoding the raster (PNG header or PNM header).
inline std::pair<std::size_t, std::size_t> probe_size(const std::filesystem::path& path) {
    if (detail::has_extension(path, {".ppm", ".pgm", ".pnm"})) {
        const RawRaster raw = detail::read_pnm_raw(path);
        return {raw.width, raw.height};
    }
    if (detail::has_extension(path, {".pfm"})) {
        const Plane p = detail::read_pfm(path);
        return {p.width(), p.height()};
    }
    const RawRaster raw = detail::read_png_raw(path, true);
    return {raw.width, raw.height};
}

// RGB image normalized by the file's bit-depth maximum. Grayscale files are
// replicated into all three channels.
inline Image read_image(const std::filesystem::path& path) {
    const RawRaster raw = detail::read_raw(path);
    const double scale = 1.0 / raw.max_value();
    Image img(raw.width, raw.height);
    const std::size_t n = raw.width * raw.height;
    for (std::size_t i = 0; i < n; ++i) {
        if (raw.channels == 3) {
            img.red()[i] = raw.samples[3 * i] * scale;
            img.green()[i] = raw.samples[3 * i + 1] * scale;
            img.blue()[i] = raw.samples[3 * i + 2] * scale;
        } else {
            img.red()[i] = img.green()[i] = img.blue()[i] = raw.samples[i] * scale;
        }
    }
    return img;
}

struct GrayRead {
    Plane plane;
    int bit_depth = 8;  // 32 for PFM float data, which is returned unscaled
};

// Single-channel read; colour files are rejected. Integer samples are
// normalized by the bit-depth maximum.
inline GrayRead read_gray(const std::filesystem::path& path) {
    if (detail::has_extension(path, {".pfm"})) return {detail::read_pfm(path), 32};
    const RawRaster raw = detail::read_raw(path);
    if (raw.channels != 1) throw IoError(path, "expected a single-channel image");
    const double scale = 1.0 / raw.max_value();
    Plane p(raw.width, raw.height);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = raw.samples[i] * scale;
    return {std::move(p), raw.bit_depth};
}

// 8-bit RGB; the file type follows the extension (.ppm or .png).
inline void write_image(const std::filesystem::path& path, const Image& img) {
    RawRaster raw;
    raw.width = img.width();
    raw.height = img.height();
    raw.channels = 3;
    raw.bit_depth = 8;
    raw.samples.resize(img.pixel_count() * 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        raw.samples[3 * i] = detail::quantize(img.red()[i], 255.0);
        raw.samples[3 * i + 1] = detail::quantize(img.green()[i], 255.0);
        raw.samples[3 * i + 2] = detail::quantize(img.blue()[i], 255.0);
    }
    if (detail::has_extension(path, {".ppm", ".pnm"}))
        detail::write_pnm_raw(path, raw);
    else
        detail::write_png_raw(path, raw);
}

// Grayscale PNG (or PGM by extension) at 8 or 16 bits; samples clamped to
// [0,1]. A .pfm path stores float32 samples unclamped and ignores bit_depth.
inline void write_gray(const std::filesystem::path& path, const Plane& p, int bit_depth = 16) {
    if (detail::has_extension(path, {".pfm"})) return detail::write_pfm(path, p);
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_gray: bit depth must be 8 or 16");
    RawRaster raw;
    raw.width = p.width();
    raw.height = p.height();
    raw.channels = 1;
    raw.bit_depth = bit_depth;
    raw.samples.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) raw.samples[i] = detail::quantize(p[i], raw.max_value());
    if (detail::has_extension(path, {".pgm", ".pnm"}))
        detail::write_pnm_raw(path, raw);
    else
        detail::write_png_raw(path, raw);
}

}  // namespace uwdepth
