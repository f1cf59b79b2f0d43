// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "scarf/backbone.hpp"
#include "scarf/ops.hpp"
#include "support.hpp"

using namespace scarf;
using scarf::testing::random_tensor;

TEST_CASE("pyramid geometry", "[backbone]") {
    const PyramidSpec spec;
    CHECK(spec.stride(0) == 8);
    CHECK(spec.stride(1) == 16);
    CHECK(spec.stride(2) == 32);
    CHECK(spec.level_channels() == std::vector<std::int64_t>{32, 64, 128});

    ParamStore store(3);
    const Backbone bb(store, spec);
    const PyramidFeatures f = bb.forward(store, random_tensor({3, 64, 64}, 1, 0, 1));
    REQUIRE(f.k() == 3);
    CHECK(f.levels[0].dims() == Shape{32, 8, 8});
    CHECK(f.levels[1].dims() == Shape{64, 4, 4});
    CHECK(f.levels[2].dims() == Shape{128, 2, 2});
    const auto info = f.info(64);
    CHECK(info[2].stride == 32);

    for (int l = 1; l < spec.k; ++l) CHECK(receptive_field(spec, l) > receptive_field(spec, l - 1));
}

TEST_CASE("backbone input validation", "[backbone]") {
    ParamStore store(3);
    const Backbone bb(store, PyramidSpec{});
    CHECK_THROWS_AS(bb.forward(store, Tensor({3, 48, 64})), ShapeError);
    CHECK_THROWS_AS(bb.forward(store, Tensor({1, 64, 64})), ShapeError);
    PyramidSpec bad;
    bad.k = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.k = 6;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero image with zero biases gives zero features", "[backbone]") {
    ParamStore store(4);
    const Backbone bb(store, PyramidSpec{});
    for (const auto& t : bb.forward(store, Tensor({3, 64, 64})).levels) {
        for (Real v : t.data()) CHECK(v == 0);
    }
}

TEST_CASE("first-layer weights receive gradient", "[backbone]") {
    PyramidSpec spec;
    spec.stage_channels = {4, 4, 4, 4, 4};
    ParamStore store(5);
    const Backbone bb(store, spec);
    const Tensor img = random_tensor({3, 32, 32}, 6, 0, 1);
    Tape tape;
    store.watch(tape);
    const auto f = bb.forward(store, img);
    tape.backward(sum(f.levels[0]));
    const auto g = store.gradients(tape);
    store.detach();
    double norm = 0;
    for (Real v : g.at("backbone.stage1.down.weight").data()) norm += std::abs(v);
    CHECK(norm > 0);
}

TEST_CASE("backbone is deterministic", "[backbone]") {
    ParamStore a(9), b(9);
    const Backbone ba(a, PyramidSpec{}), bbk(b, PyramidSpec{});
    const Tensor img = random_tensor({3, 64, 64}, 10, 0, 1);
    const auto fa = ba.forward(a, img), fb = bbk.forward(b, img);
    for (int l = 0; l < 3; ++l) CHECK(fa.levels[static_cast<std::size_t>(l)].values() == fb.levels[static_cast<std::size_t>(l)].values());
}
