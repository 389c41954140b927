#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uwdepth/depth.hpp"
#include "uwdepth/rmi.hpp"
#include "uwdepth/summation.hpp"

namespace uwdepth {

// Linear depth prior d = tau0 + tau1 * R + tau2 * M.
struct PriorCoefficients {
    double tau0 = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;

    double operator()(double r, double m) const { return tau0 + tau1 * r + tau2 * m; }

    friend bool operator==(const PriorCoefficients&, const PriorCoefficients&) = default;
};

struct PriorSample {
    double r = 0.0;
    double m = 0.0;
    double d = 0.0;
};

struct FitReport {
    PriorCoefficients coefficients;
    double residual_rms = 0.0;
    std::size_t n_pixels = 0;
    // True when the unregularized normal matrix is numerically singular, i.e.
    // the ridge term, not the data, pinned down the solution.
    bool ridge_used = false;
};

inline constexpr double kPriorRidge = 1e-6;

// Running sums of the normal equations for rows (1, r, m) against target d.
class NormalEquations {
public:
    void add(double r, double m, double d) {
        if (!std::isfinite(r) || !std::isfinite(m) || !std::isfinite(d) || d < 0.0)
            throw std::invalid_argument("fit_prior: samples must be finite with depth >= 0");
        const double row[3] = {1.0, r, m};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) ata_[a][b] += row[a] * row[b];
            atd_[a] += row[a] * d;
        }
        dtd_ += d * d;
        ++count_;
    }

    void merge(const NormalEquations& other) {
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) ata_[a][b] += other.ata_[a][b];
            atd_[a] += other.atd_[a];
        }
        dtd_ += other.dtd_;
        count_ += other.count_;
    }

    std::size_t count() const noexcept { return count_; }

    // Solves (A^T A + ridge I) tau = A^T d. The residual is recovered from the
    // accumulated sums.
    FitReport solve(double ridge = kPriorRidge) const {
        if (count_ < 3) throw std::invalid_argument("fit_prior: need at least 3 samples");
        std::array<std::array<double, 3>, 3> m = ata_;
        for (int a = 0; a < 3; ++a) m[a][a] += ridge;
        const auto tau = solve_spd(m, atd_);

        FitReport report;
        report.coefficients = {tau[0], tau[1], tau[2]};
        report.n_pixels = count_;
        report.ridge_used = is_singular(ata_);
        // r^T r = d^T d - 2 tau^T A^T d + tau^T A^T A tau
        double quad = 0.0, lin = 0.0;
        for (int a = 0; a < 3; ++a) {
            lin += tau[a] * atd_[a];
            for (int b = 0; b < 3; ++b) quad += tau[a] * ata_[a][b] * tau[b];
        }
        const double sse = std::max(0.0, dtd_ - 2.0 * lin + quad);
        report.residual_rms = std::sqrt(sse / static_cast<double>(count_));
        return report;
    }

private:
    using Mat3 = std::array<std::array<double, 3>, 3>;
    using Vec3 = std::array<double, 3>;

    // Cholesky factorization and two triangular solves.
    static Vec3 solve_spd(const Mat3& a, const Vec3& rhs) {
        Mat3 l{};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j <= i; ++j) {
                double s = a[i][j];
                for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
                if (i == j) {
                    if (!(s > 0.0)) throw std::runtime_error("fit_prior: normal matrix is not positive definite");
                    l[i][i] = std::sqrt(s);
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        Vec3 y{}, x{};
        for (int i = 0; i < 3; ++i) {
            double s = rhs[i];
            for (int k = 0; k < i; ++k) s -= l[i][k] * y[k];
            y[i] = s / l[i][i];
        }
        for (int i = 2; i >= 0; --i) {
            double s = y[i];
            for (int k = i + 1; k < 3; ++k) s -= l[k][i] * x[k];
            x[i] = s / l[i][i];
        }
        return x;
    }

    static bool is_singular(const Mat3& a) {
        const double scale = std::max({a[0][0], a[1][1], a[2][2]});
        if (!(scale > 0.0)) return true;
        Mat3 l{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j <= i; ++j) {
                double s = a[i][j];
                for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
                if (i == j) {
                    if (s <= 1e-10 * scale) return true;
                    l[i][i] = std::sqrt(s);
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        return false;
    }

    Mat3 ata_{};
    Vec3 atd_{};
    double dtd_ = 0.0;
    std::size_t count_ = 0;
};

inline FitReport fit_prior(std::span<const PriorSample> samples, double ridge = kPriorRidge) {
    if (samples.size() < 3) throw std::invalid_argument("fit_prior: need at least 3 samples");
    NormalEquations eq;
    for (const auto& s : samples) eq.add(s.r, s.m, s.d);
    FitReport report = eq.solve(ridge);

    // Exact second-pass residual; the sum-based one is only used for pooled fits.
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double e = samples[i].d - report.coefficients(samples[i].r, samples[i].m);
        sq[i] = e * e;
    }
    report.residual_rms = std::sqrt(pairwise_mean(sq));
    return report;
}

namespace detail {

// Sample positions along one axis: one per stride-sized cell, near the cell
// centre. For even strides the offset alternates between the two middle
// pixels so the samples are not shifted towards one edge on average.
inline std::vector<std::size_t> stride_positions(std::size_t extent, std::size_t stride) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k * stride < extent; ++k) {
        const std::size_t pos = k * stride + (stride - 1 + (k & 1)) / 2;
        out.push_back(std::min(pos, extent - 1));
    }
    return out;
}

}  // namespace detail

// Adds one valid pixel per stride x stride cell of one image to the sums.
inline void accumulate_prior(const RmiPlanes& rmi, const DepthMap& depth, std::size_t stride, NormalEquations& eq) {
    if (stride == 0) throw std::invalid_argument("accumulate_prior: stride must be >= 1");
    if (!rmi.r.same_shape(depth.values())) throw std::invalid_argument("accumulate_prior: RMI and depth differ in size");
    const auto xs = detail::stride_positions(depth.width(), stride);
    for (std::size_t y : detail::stride_positions(depth.height(), stride))
        for (std::size_t x : xs) {
            const std::size_t i = y * depth.width() + x;
            if (depth.valid(i)) eq.add(rmi.r[i], rmi.m[i], depth[i]);
        }
}

inline DepthMap predict_prior(const RmiPlanes& rmi, const PriorCoefficients& tau) {
    DepthMap out(rmi.width(), rmi.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, tau(rmi.r[i], rmi.m[i]));
    return out;
}

namespace detail {

inline void check_pair(const DepthMap& a, const DepthMap& b, const char* who) {
    if (!a.same_shape(b) || a.size() == 0) throw std::invalid_argument(std::string(who) + ": depth maps differ in size");
}

}  // namespace detail

// Mean squared difference between the prior map and the prediction over
// pixels valid in both. Zero when no pixel is jointly valid.
inline double domain_loss(const DepthMap& prior, const DepthMap& pred) {
    detail::check_pair(prior, pred, "domain_loss");
    std::vector<double> sq;
    sq.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (prior.valid(i) && pred.valid(i)) {
            const double e = prior[i] - pred[i];
            sq.push_back(e * e);
        }
    return sq.empty() ? 0.0 : pairwise_mean(sq);
}

// Gradient of domain_loss with respect to pred.
inline std::vector<double> domain_loss_grad(const DepthMap& prior, const DepthMap& pred) {
    detail::check_pair(prior, pred, "domain_loss");
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) n += prior.valid(i) && pred.valid(i);
    std::vector<double> g(pred.size(), 0.0);
    if (n == 0) return g;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (prior.valid(i) && pred.valid(i)) g[i] = -2.0 * (prior[i] - pred[i]) / static_cast<double>(n);
    return g;
}

inline void to_json(nlohmann::json& j, const FitReport& r) {
    j = nlohmann::json{{"tau0", r.coefficients.tau0},
                       {"tau1", r.coefficients.tau1},
                       {"tau2", r.coefficients.tau2},
                       {"residual_rms", r.residual_rms},
                       {"n_pixels", r.n_pixels}};
}

inline void from_json(const nlohmann::json& j, FitReport& r) {
    r.coefficients.tau0 = j.at("tau0").get<double>();
    r.coefficients.tau1 = j.at("tau1").get<double>();
    r.coefficients.tau2 = j.at("tau2").get<double>();
    r.residual_rms = j.value("residual_rms", 0.0);
    r.n_pixels = j.value("n_pixels", std::size_t{0});
}

}  // namespace uwdepth
