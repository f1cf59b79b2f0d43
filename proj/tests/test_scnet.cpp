// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>

#include "scarf/ops.hpp"
#include "scarf/scnet.hpp"
#include "support.hpp"

using namespace scarf;
using scarf::testing::bit_equal;
using scarf::testing::fill_param;
using scarf::testing::random_tensor;
using scarf::testing::zero_params;

namespace {

PyramidFeatures random_pyramid(const PyramidSpec& spec, std::uint64_t seed) {
    PyramidFeatures p;
    for (int l = 0; l < spec.k; ++l) p.levels.push_back(random_tensor({spec.channels(l), spec.height(l), spec.width(l)}, seed + static_cast<std::uint64_t>(l)));
    return p;
}

}  // namespace

TEST_CASE("matching block", "[scnet][matching]") {
    ParamStore store(1);
    const MatchingBlock mb(store, "m", {4, 6, 8}, 4, 8, 8);
    const std::vector<Tensor> xs{random_tensor({4, 8, 8}, 1), random_tensor({6, 4, 4}, 2), random_tensor({8, 2, 2}, 3)};
    for (int l = 0; l < 3; ++l) CHECK(mb.forward(store, xs[static_cast<std::size_t>(l)], l).dims() == Shape{4, 8, 8});
    CHECK_THROWS_AS(mb.forward(store, xs[0], 3), ArgumentError);

    // Identity 1x1 conv on the largest level leaves it unchanged.
    Tensor eye({4, 4, 1, 1});
    for (int i = 0; i < 4; ++i) eye.mutable_data()[static_cast<std::size_t>(i * 5)] = 1;
    store.assign(mb.conv(0).weight, eye);
    CHECK(bit_equal(mb.forward(store, xs[0], 0), xs[0]));

    // Constant maps stay constant through the resize.
    const Tensor up = bilinear_resize(Tensor::full({6, 4, 4}, 0.7f), 8, 8);
    for (Real v : up.data()) CHECK(v == Catch::Approx(0.7f));
}

TEST_CASE("lstm step fixtures", "[scnet][lstm]") {
    ParamStore store(2);
    const auto cell = ConvLstmCell::create(store, "cell", 4);
    CHECK(store.at(cell.b_f).values() == std::vector<Real>(4, 1));
    CHECK(store.at(cell.b_i).values() == std::vector<Real>(4, 0));
    const Tensor x = random_tensor({4, 5, 5}, 4);

    SECTION("zero parameters and state") {
        zero_params(store);
        LstmGates g;
        const LstmState s = lstm_step(store, cell, x, LstmState::zeros(4, 5, 5), &g);
        for (const Tensor* t : {&g.input, &g.forget, &g.output}) CHECK(t->values() == std::vector<Real>(4, 0.5f));
        for (const Tensor* t : std::initializer_list<const Tensor*>{&g.candidate, &s.cell, &s.hidden}) {
            for (Real v : t->data()) CHECK(v == 0);
        }
    }
    SECTION("closed output gate silences the output") {
        fill_param(store, cell.b_o, -1000);
        const LstmState prev{random_tensor({4, 5, 5}, 5), random_tensor({4, 5, 5}, 6)};
        const LstmState s = lstm_step(store, cell, x, prev);
        for (Real v : s.hidden.data()) CHECK(std::abs(v) < 1e-30);
    }
    SECTION("open forget gate and closed input gate carry the state") {
        fill_param(store, cell.b_f, 1000);
        fill_param(store, cell.b_i, -1000);
        const LstmState prev{random_tensor({4, 5, 5}, 7), random_tensor({4, 5, 5}, 8)};
        const LstmState s = lstm_step(store, cell, x, prev);
        CHECK(bit_equal(s.cell, prev.cell));
    }
    SECTION("gate and output ranges") {
        LstmGates g;
        const LstmState s = lstm_step(store, cell, x, LstmState{random_tensor({4, 5, 5}, 9), random_tensor({4, 5, 5}, 10)}, &g);
        for (const Tensor* t : {&g.input, &g.forget, &g.output}) {
            for (Real v : t->data()) CHECK((v > 0 && v < 1));
        }
        for (Real v : s.hidden.data()) CHECK((v > -1 && v < 1));
    }
    SECTION("shape errors") {
        CHECK_THROWS_AS(lstm_step(store, cell, random_tensor({3, 5, 5}, 11), LstmState::zeros(4, 5, 5)), ShapeError);
        CHECK_THROWS_AS(lstm_step(store, cell, x, LstmState::zeros(4, 4, 5)), ShapeError);
    }
}

TEST_CASE("scnet forward shapes and zero network", "[scnet]") {
    PyramidSpec spec;  // levels 8x8, 4x4, 2x2
    ParamStore store(3);
    const ScNet net(store, spec, ScNetConfig{16, true});
    const auto p = random_pyramid(spec, 20);
    const FusedFeatures f = net.forward(store, p);
    REQUIRE(f.levels.size() == 3);
    for (const auto& t : f.levels) CHECK(t.dims() == Shape{32, 8, 8});

    zero_params(store);
    for (const auto& t : net.forward(store, p).levels) {
        for (Real v : t.data()) CHECK(v == 0);
    }

    PyramidFeatures short_p;
    short_p.levels = {p.levels[0]};
    CHECK_THROWS_AS(net.forward(store, short_p), ArgumentError);
}

TEST_CASE("reversed sweep with swapped cells mirrors the backward half", "[scnet][symmetry]") {
    ParamStore store(4);
    const auto fwd = ConvLstmCell::create(store, "f", 4);
    const auto bwd = ConvLstmCell::create(store, "b", 4);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::vector<Tensor> xs;
        for (int l = 0; l < 3; ++l) xs.push_back(random_tensor({4, 4, 4}, 100 * seed + static_cast<std::uint64_t>(l)));
        const FusedFeatures a = bilstm_sweep(store, xs, fwd, &bwd);
        std::vector<Tensor> rev(xs.rbegin(), xs.rend());
        const FusedFeatures b = bilstm_sweep(store, rev, bwd, &fwd);
        for (int l = 0; l < 3; ++l) {
            const auto& al = a.levels[static_cast<std::size_t>(l)];
            const auto& bl = b.levels[static_cast<std::size_t>(2 - l)];
            CHECK(bit_equal(slice_channels(bl, 0, 4), slice_channels(al, 4, 4)));
            CHECK(bit_equal(slice_channels(bl, 4, 4), slice_channels(al, 0, 4)));
        }
    }
}

TEST_CASE("unidirectional sweep gives lower levels no view of higher ones", "[scnet]") {
    PyramidSpec spec;
    ParamStore store(5);
    const ScNet uni(store, spec, ScNetConfig{8, false});
    CHECK(uni.fused_channels() == 8);
    auto p = random_pyramid(spec, 30);
    const auto before = uni.forward(store, p);
    p.levels[2] = random_tensor(p.levels[2].dims(), 31);
    const auto after = uni.forward(store, p);
    CHECK(bit_equal(before.levels[0], after.levels[0]));
    CHECK(bit_equal(before.levels[1], after.levels[1]));
    CHECK_FALSE(bit_equal(before.levels[2], after.levels[2]));
}

TEST_CASE("cell parameters are shared across levels", "[scnet][params]") {
    auto cell_params = [](int k, bool bi) {
        PyramidSpec spec;
        spec.k = k;
        spec.input_h = spec.input_w = 128;
        ParamStore store(6);
        const ScNet net(store, spec, ScNetConfig{16, bi});
        return param_count(store, net.cell_prefix());
    };
    const std::int64_t per_cell = 6 * 16 * 16 + 3 * 16 + 2 * 16 * 16 * 9 + 16;
    CHECK(cell_params(3, false) == per_cell);
    CHECK(cell_params(3, true) == 2 * per_cell);
    CHECK(cell_params(5, true) == cell_params(3, true));
}
