// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>

#include "scarf/nn.hpp"
#include "scarf/ops.hpp"
#include "support.hpp"

using namespace scarf;
using Catch::Approx;

TEST_CASE("initialisation schemes", "[nn][init]") {
    CHECK(init_tensor({4, 3}, Init::zeros(), 1).values() == std::vector<Real>(12, 0));
    CHECK(init_tensor({5}, Init::constant(0.25f), 1).values() == std::vector<Real>(5, 0.25f));
    CHECK(init_tensor({8, 4, 3, 3}, Init::kaiming(), 7).values() == init_tensor({8, 4, 3, 3}, Init::kaiming(), 7).values());
    CHECK(init_tensor({8, 4, 3, 3}, Init::kaiming(), 7).values() != init_tensor({8, 4, 3, 3}, Init::kaiming(), 8).values());

    CHECK(fan_in({8, 4, 3, 3}) == 36);
    CHECK(fan_in({6, 10}) == 10);
    CHECK(fan_in({7}) == 7);
    const Tensor w = init_tensor({16, 8, 3, 3}, Init::kaiming(), 3);
    const double bound = std::sqrt(6.0 / 72.0);
    double lo = 1, hi = -1;
    for (Real v : w.data()) {
        CHECK(std::abs(v) <= bound);
        lo = std::min(lo, static_cast<double>(v));
        hi = std::max(hi, static_cast<double>(v));
    }
    // 1152 draws should come close to both ends of the interval.
    CHECK(hi > 0.95 * bound);
    CHECK(lo < -0.95 * bound);
}

TEST_CASE("parameter store", "[nn][store]") {
    ParamStore store(42);
    CHECK(param_count(store) == 0);
    const auto conv = Conv2dLayer::create(store, "c", 4, 8, 3);
    CHECK(param_count(store) == 8 * 4 * 3 * 3 + 8);
    CHECK(conv.pad == 1);
    CHECK(store.names() == std::vector<std::string>{"c.weight", "c.bias"});
    CHECK_THROWS_AS(store.add("c.weight", {1}), ConfigError);
    CHECK_THROWS_AS(store.at("missing"), ArgumentError);
    CHECK_THROWS_AS(store.assign("c.bias", Tensor({9})), ShapeError);

    // Values depend on the store seed and the name, not on registration order.
    ParamStore other(42);
    other.add("x", {3});
    Conv2dLayer::create(other, "c", 4, 8, 3);
    CHECK(other.at("c.weight").values() == store.at("c.weight").values());
    CHECK(store.at("c.bias").values() == std::vector<Real>(8, 0));
    CHECK(param_count(other, "c.") == param_count(store));
}

TEST_CASE("gradients of a store", "[nn][store]") {
    ParamStore store(1);
    const auto lin = LinearLayer::create(store, "fc", 3, 2);
    const Tensor x({3}, {1, 2, 3});
    Tape tape;
    store.watch(tape);
    tape.backward(sum(lin.forward(store, x)));
    const GradientMap g = store.gradients(tape);
    store.detach();
    CHECK(g.at("fc.bias").values() == std::vector<Real>{1, 1});
    CHECK(g.at("fc.weight").values() == std::vector<Real>{1, 2, 3, 1, 2, 3});
    CHECK_FALSE(store.at("fc.weight").is_tracked());
}

namespace {

SgdConfig plain_sgd(double lr, double momentum, double wd) {
    SgdConfig c;
    c.lr_schedule = {{100, lr}};
    c.momentum = momentum;
    c.weight_decay = wd;
    return c;
}

}  // namespace

TEST_CASE("sgd update rule", "[nn][sgd]") {
    ParamStore store;
    store.add("p", Tensor({2}, {1.0f, -2.0f}));
    const GradientMap grads{{"p", Tensor({2}, {0.5f, 0.25f})}};

    SECTION("plain gradient step") {
        SgdState st;
        sgd_step(store, grads, plain_sgd(1, 0, 0), 0, st);
        CHECK(store.at("p").values() == std::vector<Real>{0.5f, -2.25f});
    }
    SECTION("zero gradient, no decay") {
        SgdState st;
        const GradientMap zero{{"p", Tensor({2})}};
        for (int i = 0; i < 5; ++i) sgd_step(store, zero, plain_sgd(0.1, 0.9, 0), i, st);
        CHECK(store.at("p").values() == std::vector<Real>{1.0f, -2.0f});
    }
    SECTION("two momentum steps move by g + 1.9 g") {
        SgdState st;
        const SgdConfig c = plain_sgd(1, 0.9, 0);
        sgd_step(store, grads, c, 0, st);
        sgd_step(store, grads, c, 1, st);
        // Scalar recurrence v1 = g, v2 = 0.9 g + g.
        CHECK(store.at("p")[0] == Approx(1.0 - 2.9 * 0.5));
        CHECK(store.at("p")[1] == Approx(-2.0 - 2.9 * 0.25));
    }
    SECTION("weight decay shrinks the norm monotonically") {
        SgdState st;
        const GradientMap zero{{"p", Tensor({2})}};
        double prev = 5.0;
        for (int i = 0; i < 20; ++i) {
            sgd_step(store, zero, plain_sgd(0.1, 0.9, 0.05), i, st);
            const double n = std::hypot(store.at("p")[0], store.at("p")[1]);
            CHECK(n < prev);
            prev = n;
        }
    }
    SECTION("missing gradient") {
        SgdState st;
        CHECK_THROWS_AS(sgd_step(store, GradientMap{}, plain_sgd(1, 0, 0), 0, st), ConsistencyError);
    }
}

TEST_CASE("learning-rate schedule", "[nn][sgd]") {
    SgdConfig c;
    c.lr_schedule = SgdConfig::default_schedule(2000);
    REQUIRE(c.lr_schedule.size() == 3);
    CHECK(c.lr_schedule[0].until == 1200);
    CHECK(c.lr_schedule[1].until == 1800);
    CHECK(c.lr_at(0) == 1e-2);
    CHECK(c.lr_at(1199) == 1e-2);
    CHECK(c.lr_at(1200) == 1e-3);
    CHECK(c.lr_at(1799) == 1e-3);
    CHECK(c.lr_at(1800) == 1e-4);
    CHECK(c.lr_at(5000) == 1e-4);
    for (const auto& phase : c.lr_schedule) {
        if (&phase != &c.lr_schedule.back()) CHECK(c.lr_at(phase.until - 1) != c.lr_at(phase.until));
    }

    c.lr_schedule = {{10, 0.1}, {10, 0.01}};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.lr_schedule = {{10, -0.1}};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.lr_schedule = {};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
