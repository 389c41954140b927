#pragma once

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "uwdepth/enhance.hpp"

namespace uwdepth {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw std::invalid_argument("config: bad value for '" + key + "': " + text);
    return v;
}

inline void set_config_key(EnhanceConfig& cfg, const std::string& key, double v) {
    if (key == "alpha1")
        cfg.alpha1 = v;
    else if (key == "alpha2")
        cfg.alpha2 = v;
    else if (key == "blur_sigma")
        cfg.blur_sigma = v;
    else if (key == "blur_radius") {
        if (v != std::floor(v)) throw std::invalid_argument("config: blur_radius must be an integer");
        cfg.blur_radius = static_cast<int>(v);
    } else
        throw std::invalid_argument("config: unknown key '" + key + "'");
}

}  // namespace detail

// Parses either a flat JSON object or `key = value` lines ('#' starts a
// comment) over `base`. Keys mirror EnhanceConfig; anything else is rejected.
inline EnhanceConfig parse_enhance_config(const std::string& text, EnhanceConfig base = {}) {
    const std::string body = detail::trim(text);
    if (!body.empty() && body.front() == '{') {
        const auto j = nlohmann::json::parse(body);
        for (const auto& [key, value] : j.items()) {
            if (!value.is_number()) throw std::invalid_argument("config: '" + key + "' must be a number");
            detail::set_config_key(base, key, value.get<double>());
        }
    } else {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("config: expected key=value, got '" + line + "'");
            const std::string key = detail::trim(line.substr(0, eq));
            detail::set_config_key(base, key, detail::parse_number(key, detail::trim(line.substr(eq + 1))));
        }
    }
    base.validate();
    return base;
}

inline EnhanceConfig load_enhance_config(const std::filesystem::path& path, EnhanceConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_enhance_config(ss.str(), base);
}

inline nlohmann::json config_to_json(const EnhanceConfig& cfg) {
    return {{"alpha1", cfg.alpha1}, {"alpha2", cfg.alpha2}, {"blur_sigma", cfg.blur_sigma},
            {"blur_radius", cfg.blur_radius}};
}

}  // namespace uwdepth
