// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "scarf/heatmap.hpp"
#include "scarf/model.hpp"
#include "support.hpp"

using namespace scarf;
using scarf::testing::random_tensor;

namespace {

// Brute force: channel whose spatial mean is largest, first index on ties.
std::int64_t argmax_of_means(const Tensor& f) {
    std::int64_t best = -1;
    double best_mean = 0;
    for (std::int64_t c = 0; c < f.dim(0); ++c) {
        double s = 0;
        for (std::int64_t y = 0; y < f.dim(1); ++y) {
            for (std::int64_t x = 0; x < f.dim(2); ++x) s += f.at(c, y, x);
        }
        const double mean = s / static_cast<double>(f.dim(1) * f.dim(2));
        if (best < 0 || mean > best_mean) {
            best = c;
            best_mean = mean;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("constant map gives a uniform image", "[heatmap]") {
    Tensor f({2, 3, 4});
    std::fill(f.mutable_data().begin(), f.mutable_data().end(), Real(0.7));
    const GrayImage g = heatmap(f);
    CHECK(g.width == 4);
    CHECK(g.height == 3);
    for (auto p : g.pixels) CHECK(p == 128);
}

TEST_CASE("single hot feature gives a single white pixel", "[heatmap]") {
    Tensor f({3, 4, 4});
    f.mutable_data()[static_cast<std::size_t>(2 * 16 + 5)] = 1;
    CHECK(select_channel(f) == 2);
    const GrayImage g = heatmap(f);
    for (std::size_t i = 0; i < g.pixels.size(); ++i) CHECK(g.pixels[i] == (i == 5 ? 255 : 0));
}

TEST_CASE("channel selection matches the brute-force oracle", "[heatmap]") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Tensor f = random_tensor({6, 5, 5}, seed);
        CHECK(select_channel(f) == argmax_of_means(f));
    }
    Tensor tie({3, 1, 2}, {0, 1, 1, 0, 0.5f, 0.5f});
    CHECK(select_channel(tie) == 0);
}

TEST_CASE("heatmap is invariant to argmax-preserving rescaling", "[heatmap]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Tensor f = random_tensor({5, 4, 6}, seed, 0, 1);
        const std::int64_t c = select_channel(f);
        Tensor g = f.clone();
        auto v = g.mutable_data();
        for (std::int64_t ch = 0; ch < 5; ++ch) {
            const Real s = ch == c ? Real(3) : Real(0.5) + Real(0.1) * static_cast<Real>(ch);
            for (std::size_t i = 0; i < 24; ++i) v[static_cast<std::size_t>(ch * 24) + i] *= s;
        }
        REQUIRE(select_channel(g) == c);
        CHECK(heatmap(g).pixels == heatmap(f).pixels);
    }
}

TEST_CASE("model heatmaps", "[heatmap]") {
    TrainConfig cfg;
    const DetectorModel model(cfg);
    const Tensor image = random_tensor({3, 64, 64}, 3, 0, 1);
    for (int level = 0; level < 3; ++level) {
        const Tensor p = heatmap_features(model, image, level, HeatmapStage::Pyramid);
        const Tensor s = heatmap_features(model, image, level, HeatmapStage::Fused);
        CHECK(p.dim(1) == s.dim(1));
        CHECK(s.dim(0) == 2 * p.dim(0));
        const GrayImage g = visualize_heatmap(model, image, level, HeatmapStage::Fused);
        CHECK(g.width == s.dim(2));
        CHECK(g.pixels == channel_heatmap(s, argmax_of_means(s)).pixels);
    }
    const Tensor big = random_tensor({3, 96, 80}, 4, 0, 1);
    CHECK(heatmap_features(model, big, 0, HeatmapStage::Pyramid).dims() == Shape{32, 8, 8});
    CHECK_THROWS_AS(heatmap_features(model, image, 3, HeatmapStage::Pyramid), ArgumentError);
    CHECK_THROWS_AS(heatmap_features(model, image, -1, HeatmapStage::Pyramid), ArgumentError);
    CHECK(parse_heatmap_stage("scarf") == HeatmapStage::Fused);
    CHECK(to_string(HeatmapStage::Pyramid) == "pyramid");
    CHECK_THROWS_AS(parse_heatmap_stage("fused"), ArgumentError);
    CHECK_THROWS_AS(channel_heatmap(random_tensor({2, 2, 2}, 1), 2), ArgumentError);
}
