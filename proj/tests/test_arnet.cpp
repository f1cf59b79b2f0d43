// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include "scarf/arnet.hpp"
#include "scarf/ops.hpp"
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

FusedFeatures random_fused(int k, std::int64_t c, std::int64_t h, std::uint64_t seed) {
    FusedFeatures f;
    for (int l = 0; l < k; ++l) f.levels.push_back(random_tensor({c, h, h}, seed + static_cast<std::uint64_t>(l)));
    return f;
}

}  // namespace

TEST_CASE("combine modes", "[arnet]") {
    CHECK(parse_combine_mode("concat") == CombineMode::ChannelConcat);
    CHECK(parse_combine_mode("add") == CombineMode::ElementAdd);
    CHECK_THROWS_AS(parse_combine_mode("sum"), ConfigError);
    CHECK(combined_channels(CombineMode::ChannelConcat, 32, 16) == 48);
    CHECK(combined_channels(CombineMode::ElementAdd, 32, 32) == 32);
    CHECK_THROWS_AS(combined_channels(CombineMode::ElementAdd, 32, 16), ConfigError);
}

TEST_CASE("SE attention", "[arnet][se]") {
    ParamStore store(1);
    const SeBlock se(store, "se", 24, 4);
    CHECK(param_count(store) == 24 * 6 + 6 + 6 * 24 + 24);
    const Tensor z = random_tensor({24, 8, 8}, 2);
    // Open interval in exact arithmetic; single precision may round saturated entries to the bounds.
    const Tensor att = se_attention(store, se, z);
    for (Real v : att.data()) CHECK((v > 0 && v < 1));
    CHECK_THROWS_AS(se_attention(store, se, random_tensor({12, 8, 8}, 3)), ShapeError);
    CHECK_THROWS_AS(SeBlock(store, "bad", 24, 5), ConfigError);

    zero_params(store);
    CHECK(se_attention(store, se, z).values() == std::vector<Real>(24, 0.5f));
}

TEST_CASE("closing one attention entry zeroes only that channel", "[arnet][se]") {
    ParamStore store(4);
    const SeBlock se(store, "se", 8, 2);
    const Tensor z = random_tensor({8, 4, 4}, 5);
    const Tensor before = hadamard(z, se.attention(store, z));
    auto bias = store.mutable_values(se.fc2().bias);
    bias[3] = -1000;
    const Tensor after = hadamard(z, se.attention(store, z));
    for (int c = 0; c < 8; ++c) {
        const Tensor a = slice_channels(after, c, 1), b = slice_channels(before, c, 1);
        if (c == 3) {
            for (Real v : a.data()) CHECK(v == 0);
        } else {
            CHECK(bit_equal(a, b));
        }
    }
    fill_param(store, se.fc2().bias, 1000);
    CHECK(bit_equal(hadamard(z, se.attention(store, z)), z));
}

TEST_CASE("arnet output channels", "[arnet]") {
    const PyramidSpec spec;  // C = (32, 64, 128)
    ParamStore store(6);
    const ArNet concat(store, spec, 3 * 16, ArNetConfig{CombineMode::ChannelConcat, true, 4, {}}, "a");
    CHECK(concat.output_channels() == std::vector<std::int64_t>{64, 128, 256});
    const auto out = concat.forward(store, random_fused(3, 16, 8, 7), random_pyramid(spec, 8));
    for (int l = 0; l < 3; ++l) {
        CHECK(out.levels[static_cast<std::size_t>(l)].dims() ==
              Shape{concat.output_channels()[static_cast<std::size_t>(l)], spec.height(l), spec.width(l)});
    }
    CHECK_THROWS_AS(ArNet(store, spec, 48, ArNetConfig{CombineMode::ElementAdd, true, 4, {16, 16, 16}}, "b"), ConfigError);
    CHECK_THROWS_AS(concat.forward(store, random_fused(3, 8, 8, 9), random_pyramid(spec, 8)), ShapeError);
}

TEST_CASE("zero arnet under addition is the identity", "[arnet]") {
    const PyramidSpec spec;
    ParamStore store(10);
    const ArNet add_net(store, spec, 48, ArNetConfig{CombineMode::ElementAdd, true, 4, {}}, "a");
    zero_params(store);
    const auto p = random_pyramid(spec, 11);
    const auto out = add_net.forward(store, random_fused(3, 16, 8, 12), p);
    for (int l = 0; l < 3; ++l) CHECK(bit_equal(out.levels[static_cast<std::size_t>(l)], p.levels[static_cast<std::size_t>(l)]));
}
