#include <gtest/gtest.h>

#include <cmath>

#include "stnhcl/data_synth.hpp"
#include "stnhcl/metrics.hpp"

using namespace stnhcl;
using namespace stnhcl::numeric;

namespace {

Tensor<double> ramp(std::size_t n, double phase) {
    Tensor<double> t({3, n, n});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x)
                t.at(c, y, x) = 0.5 + 0.4 * std::sin(0.7 * static_cast<double>(x) + 0.3 * static_cast<double>(y) + phase);
    return t;
}

TEST(Css, Identity) {
    std::mt19937_64 rng(1);
    auto x = Tensor<double>::uniform({3, 24, 24}, rng, 0, 1);
    EXPECT_NEAR(metrics::css(x, x), 1.0, 1e-12);
    EXPECT_NEAR(metrics::css(Tensor<double>({3, 16, 16}, 0.2), Tensor<double>({3, 16, 16}, 0.9)), 1.0, 1e-12);
}

TEST(Css, InvertedImageIsNearMinusOne) {
    auto x = ramp(32, 0.0);
    Tensor<double> inv = x;
    for (auto& v : inv.data()) v = 1.0 - v;
    // The stabilising constants keep the score just above -1.
    EXPECT_NEAR(metrics::css(x, inv), -1.0, 2e-2);
    EXPECT_GT(metrics::css(x, inv), -1.0);
}

TEST(Css, SymmetricAndLuminanceInvariant) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = Tensor<double>::uniform({3, 20, 20}, rng, 0.1, 0.8);
        auto b = Tensor<double>::uniform({3, 20, 20}, rng, 0.1, 0.8);
        EXPECT_LT(std::abs(metrics::css(a, b) - metrics::css(b, a)), 1e-12);
        Tensor<double> shifted = b;
        for (auto& v : shifted.data()) v += 0.15;
        EXPECT_LT(std::abs(metrics::css(a, b) - metrics::css(a, shifted)), 1e-6);
    }
}

TEST(Css, Bounded) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto a = Tensor<double>::uniform({3, 16, 16}, rng, 0, 1);
        auto b = Tensor<double>::uniform({3, 16, 16}, rng, 0, 1);
        const double v = metrics::css(a, b);
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Css, Errors) {
    EXPECT_THROW(metrics::css(Tensor<double>({3, 16, 16}), Tensor<double>({3, 16, 17})), ContractError);
    EXPECT_THROW(metrics::css(Tensor<double>({3, 4, 4}), Tensor<double>({3, 4, 4})), ContractError);
}

TEST(Grayscale, Luma) {
    Tensor<double> t({3, 1, 1});
    t[0] = 1.0;
    EXPECT_NEAR(metrics::grayscale(t)[0], 0.299, 1e-12);
    t[0] = 0.0;
    t[1] = 1.0;
    EXPECT_NEAR(metrics::grayscale(t)[0], 0.587, 1e-12);
    t[1] = 0.0;
    t[2] = 1.0;
    EXPECT_NEAR(metrics::grayscale(t)[0], 0.114, 1e-12);
}

TEST(Whiteness, ExtremesAndFreshSample) {
    Tensor<float> mask({8, 8});
    mask.at(0, 0) = 1.0f;
    EXPECT_DOUBLE_EQ(metrics::background_whiteness(Tensor<float>({3, 8, 8}, 1.0f), mask), 1.0);
    EXPECT_DOUBLE_EQ(metrics::background_whiteness(Tensor<float>({3, 8, 8}, 0.0f), mask), 0.0);
    Tensor<float> tinted({3, 8, 8}, 1.0f);
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) tinted.at(1, y, x) = 0.25f;
    EXPECT_DOUBLE_EQ(metrics::background_whiteness(tinted, mask), 0.25);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto s = synth::synth_image(synth::make_layout(seed, 64), synth::palette(synth::Domain::pasm));
        EXPECT_GE(metrics::background_whiteness(s.image, s.mask), 0.9);
    }
    EXPECT_THROW(metrics::background_whiteness(Tensor<float>({3, 8, 8}), Tensor<float>({8, 8}, 1.0f)), ContractError);
    EXPECT_THROW(metrics::background_whiteness(Tensor<float>({3, 8, 8}), Tensor<float>({4, 4})), ContractError);
}

TEST(Summarize, Mean) {
    auto r = metrics::summarize({0.5, 1.0, 0.0});
    EXPECT_DOUBLE_EQ(r.mean, 0.5);
    EXPECT_EQ(r.values.size(), 3u);
}

}  // namespace
