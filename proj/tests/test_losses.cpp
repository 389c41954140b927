#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "test_support.hpp"
#include "uwdepth/losses.hpp"

using namespace uwdepth;
using uwtest::depth_of;
using uwtest::random_depth;

namespace {

// Straight transcription of the scale-dampened log loss.
double data_oracle(const std::vector<double>& pred, const std::vector<double>& gt, double lambda, double alpha) {
    const double n = static_cast<double>(pred.size());
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double t = std::log(pred[i]) - std::log(gt[i]);
        s += t;
        s2 += t * t;
    }
    return alpha * std::sqrt(s2 / n - lambda / (n * n) * s * s);
}

DepthMap permuted(const DepthMap& d, const std::vector<std::size_t>& perm) {
    DepthMap out = d;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out[i] = d[perm[i]];
        out.set_valid(i, d.valid(perm[i]));
    }
    return out;
}

}  // namespace

TEST(LossChi2, Examples) {
    const DepthMap a = depth_of({0.3, 0.7});
    EXPECT_EQ(loss_chi2(a, a), 0.0);
    EXPECT_DOUBLE_EQ(loss_chi2(depth_of({0, 2}), depth_of({1, 1})), 1.0);
    EXPECT_NEAR(loss_chi2(depth_of({1.5, 1.5, 3.5}), depth_of({1, 2, 3})), 0.25, 1e-15);
}

TEST(LossChi2, MasksAndErrors) {
    DepthMap pred = depth_of({0.0, 5.0}), gt = depth_of({0.0, 1.0});
    gt.set_valid(1, false);
    EXPECT_EQ(loss_chi2(pred, gt), 0.0);
    gt.set_valid(0, false);
    EXPECT_THROW(loss_chi2(pred, gt), std::domain_error);
    EXPECT_THROW(loss_chi2(depth_of({1.0}), depth_of({1.0, 2.0})), std::invalid_argument);
}

TEST(LossData, Examples) {
    const DepthMap a = depth_of({0.3, 0.7});
    EXPECT_EQ(loss_data(a, a), 0.0);
    const double e = std::exp(1.0);
    EXPECT_NEAR(loss_data(depth_of({e, 2 * e}), depth_of({1, 2})), 3.872983346207417, 1e-12);
}

TEST(LossData, UniformScaleClosedForm) {
    std::mt19937_64 rng(71);
    for (double c : {0.2, 0.9, 1.3, 7.0}) {
        const DepthMap gt = random_depth(rng, 8, 8, 0.05, 1.0);
        DepthMap pred = gt;
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] *= c;
        EXPECT_NEAR(loss_data(pred, gt), 10.0 * std::sqrt(0.15) * std::abs(std::log(c)), 1e-9);
    }
}

TEST(LossData, MatchesOracle) {
    std::mt19937_64 rng(73);
    for (int t = 0; t < 20; ++t) {
        const DepthMap p = random_depth(rng, 5, 4, 0.1, 2.0), g = random_depth(rng, 5, 4, 0.1, 2.0);
        EXPECT_NEAR(loss_data(p, g), data_oracle(p.values().samples(), g.values().samples(), 0.85, 10.0), 1e-10);
    }
}

TEST(LossData, ZeroDepthsAreFloored) {
    const double v = loss_data(depth_of({0.0, 1.0}), depth_of({1.0, 1.0}));
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
}

TEST(LossData, NoValidPixelsThrows) {
    DepthMap gt = depth_of({1.0});
    gt.set_valid(0, false);
    EXPECT_THROW(loss_data(depth_of({1.0}), gt), std::domain_error);
}

TEST(LossTotal, Examples) {
    const DepthMap a = depth_of({0.4, 0.6});
    const auto zero = loss_total(a, a, a);
    EXPECT_EQ(zero.total, 0.0);

    EXPECT_NEAR(combine_losses(1, 2, 3).total, 1.8, 1e-15);

    LossWeights none{0, 0, 0};
    const auto z = loss_total(depth_of({0.1, 0.9}), depth_of({0.5, 0.2}), depth_of({0.7, 0.7}), none);
    EXPECT_EQ(z.total, 0.0);
    EXPECT_GT(z.chi2, 0.0);
}

TEST(LossTotal, BreakdownMatchesTerms) {
    std::mt19937_64 rng(79);
    const DepthMap p = random_depth(rng, 4, 4, 0.1, 1), g = random_depth(rng, 4, 4, 0.1, 1),
                   q = random_depth(rng, 4, 4, 0.1, 1);
    const auto b = loss_total(p, g, q);
    EXPECT_EQ(b.chi2, loss_chi2(p, g));
    EXPECT_EQ(b.data, loss_data(p, g));
    EXPECT_EQ(b.domain, domain_loss(q, p));
    EXPECT_DOUBLE_EQ(b.total, 0.3 * b.chi2 + 0.6 * b.data + 0.1 * b.domain);
}

TEST(LossWeights, NegativeRejected) {
    LossWeights w;
    w.lambda = -0.1;
    EXPECT_THROW(w.validate(), std::invalid_argument);
}

TEST(Losses, PermutationInvariant) {
    std::mt19937_64 rng(83);
    const DepthMap p = random_depth(rng, 7, 5, 0.1, 1), g = random_depth(rng, 7, 5, 0.1, 1);
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const DepthMap pp = permuted(p, perm), gp = permuted(g, perm);
    EXPECT_NEAR(loss_chi2(pp, gp), loss_chi2(p, g), 1e-12);
    EXPECT_NEAR(loss_data(pp, gp), loss_data(p, g), 1e-12);
    EXPECT_NEAR(domain_loss(pp, gp), domain_loss(p, g), 1e-12);
}

TEST(Losses, InnerTermNonNegative) {
    std::mt19937_64 rng(89);
    for (int t = 0; t < 100; ++t) {
        const DepthMap p = random_depth(rng, 3, 3, 1e-3, 5), g = random_depth(rng, 3, 3, 1e-3, 5);
        const auto r = detail::log_residuals(p, g, 0.85);
        EXPECT_GE(r.inner, (1 - 0.85) * r.mean_t * r.mean_t - 1e-12);
    }
}

TEST(GradCheck, AllLossesOnRandomMaps) {
    std::mt19937_64 rng(97);
    for (int t = 0; t < 10; ++t) {
        const DepthMap p = random_depth(rng, 4, 4, 0.1, 1.0), g = random_depth(rng, 4, 4, 0.1, 1.0);
        EXPECT_LT(grad_check(LossKind::chi2, p, g), 1e-4);
        EXPECT_LT(grad_check(LossKind::data, p, g), 1e-4);
        EXPECT_LT(grad_check(LossKind::domain, p, g), 1e-4);
    }
}

TEST(GradCheck, MaskedPixelsHaveZeroGradient) {
    DepthMap p = depth_of({0.2, 0.5, 0.9}), g = depth_of({0.3, 0.3, 0.3});
    g.set_valid(1, false);
    EXPECT_EQ(loss_chi2_grad(p, g)[1], 0.0);
    EXPECT_EQ(loss_data_grad(p, g)[1], 0.0);
    EXPECT_EQ(domain_loss_grad(g, p)[1], 0.0);
    EXPECT_LT(grad_check(LossKind::data, p, g), 1e-4);
}

TEST(GradCheck, NonDifferentiablePointsThrow) {
    const DepthMap g = depth_of({0.5, 0.5});
    EXPECT_THROW(grad_check(LossKind::data, depth_of({1e-6, 0.5}), g), std::domain_error);
    // pred == gt: inner term is zero, sqrt has no derivative there.
    EXPECT_THROW(loss_data_grad(g, g), std::domain_error);
}

TEST(LossName, Names) {
    EXPECT_STREQ(loss_name(LossKind::chi2), "chi2");
    EXPECT_STREQ(loss_name(LossKind::data), "data");
    EXPECT_STREQ(loss_name(LossKind::domain), "domain");
}
