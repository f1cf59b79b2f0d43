// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/nn.hpp"

#include <cmath>
#include <random>

#include "scarf/ops.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

std::int64_t fan_in(const Shape& dims) {
    if (dims.empty()) return 1;
    if (dims.size() == 1) return std::max<std::int64_t>(dims[0], 1);
    std::int64_t f = 1;
    for (std::size_t i = 1; i < dims.size(); ++i) f *= dims[i];
    return std::max<std::int64_t>(f, 1);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return splitmix64(seed ^ splitmix64(h));
}

Tensor init_tensor(const Shape& dims, Init scheme, std::uint64_t seed) {
    switch (scheme.kind) {
        case Init::Kind::Zeros:
            return Tensor::zeros(dims);
        case Init::Kind::Constant:
            return Tensor::full(dims, scheme.value);
        case Init::Kind::KaimingUniform:
            break;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in(dims)));
    std::mt19937_64 rng(seed);
    Tensor t(dims);
    // 53-bit mantissa draw; avoids the implementation-defined std distributions.
    for (auto& v : t.mutable_data()) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v = static_cast<Real>((2.0 * u - 1.0) * bound);
    }
    return t;
}

const Tensor& ParamStore::add(const std::string& name, const Shape& dims, Init scheme) {
    return add(name, init_tensor(dims, scheme, derive_seed(seed_, name)));
}

const Tensor& ParamStore::add(const std::string& name, Tensor value) {
    if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, value.detached());
    return entries_.back().second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("unknown parameter '" + name + "'");
    return entries_[it->second].second;
}

void ParamStore::assign(const std::string& name, Tensor value) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("unknown parameter '" + name + "'");
    auto& slot = entries_[it->second].second;
    if (slot.dims() != value.dims()) {
        throw ShapeError("parameter '" + name + "' has shape " + shape_str(slot.dims()) + ", got " +
                         shape_str(value.dims()));
    }
    slot = value.detached();
}

std::span<Real> ParamStore::mutable_values(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArgumentError("unknown parameter '" + name + "'");
    return entries_[it->second].second.mutable_data();
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

void ParamStore::watch(Tape& tape) {
    for (auto& [_, t] : entries_) t = tape.watch(t);
}

void ParamStore::detach() {
    for (auto& [_, t] : entries_) t = t.detached();
}

GradientMap ParamStore::gradients(const Tape& tape) const {
    GradientMap out;
    for (const auto& [name, t] : entries_) out.emplace(name, tape.grad(t));
    return out;
}

std::int64_t param_count(const ParamStore& store, std::string_view prefix) {
    std::int64_t n = 0;
    for (const auto& [name, t] : store.entries()) {
        if (name.compare(0, prefix.size(), prefix) == 0) n += t.numel();
    }
    return n;
}

std::vector<LrPhase> SgdConfig::default_schedule(std::int64_t iterations) {
    const std::int64_t a = std::max<std::int64_t>(1, iterations * 6 / 10);
    const std::int64_t b = std::max<std::int64_t>(a + 1, iterations * 9 / 10);
    const std::int64_t c = std::max<std::int64_t>(b + 1, iterations);
    return {{a, 1e-2}, {b, 1e-3}, {c, 1e-4}};
}

void SgdConfig::validate() const {
    if (lr_schedule.empty()) throw ConfigError("learning-rate schedule is empty");
    for (std::size_t i = 0; i < lr_schedule.size(); ++i) {
        if (!(lr_schedule[i].lr > 0)) throw ConfigError("learning rates must be positive");
        if (i > 0 && lr_schedule[i].until <= lr_schedule[i - 1].until) {
            throw ConfigError("learning-rate schedule bounds must be strictly increasing");
        }
    }
    if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
    if (weight_decay < 0) throw ConfigError("weight decay must be non-negative");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
}

double SgdConfig::lr_at(std::int64_t iter) const {
    for (const auto& phase : lr_schedule) {
        if (iter < phase.until) return phase.lr;
    }
    return lr_schedule.back().lr;
}

void sgd_step(ParamStore& store, const GradientMap& grads, const SgdConfig& cfg, std::int64_t iter, SgdState& state) {
    if (iter < 0) throw ArgumentError("sgd_step: negative iteration");
    for (const auto& name : store.names()) {
        if (!grads.count(name)) throw ConsistencyError("sgd_step: no gradient for parameter '" + name + "'");
    }
    const Real lr = static_cast<Real>(cfg.lr_at(iter));
    const Real mu = static_cast<Real>(cfg.momentum);
    const Real wd = static_cast<Real>(cfg.weight_decay);
    for (const auto& name : store.names()) {
        const Tensor& g = grads.at(name);
        if (g.numel() != store.at(name).numel()) {
            throw ConsistencyError("sgd_step: gradient shape mismatch for '" + name + "'");
        }
        auto pv = store.mutable_values(name);
        auto& v = state.velocity[name];
        if (v.empty()) v.assign(pv.size(), Real(0));
        auto gv = g.data();
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = mu * v[i] + gv[i] + wd * pv[i];
            pv[i] -= lr * v[i];
        }
    }
}

Conv2dLayer Conv2dLayer::create(ParamStore& store, const std::string& name, std::int64_t in, std::int64_t out,
                                int kernel, int stride, bool with_bias, Init weight_init) {
    Conv2dLayer layer;
    layer.weight = name + ".weight";
    layer.in_channels = in;
    layer.out_channels = out;
    layer.kernel = kernel;
    layer.stride = stride;
    layer.pad = (kernel - 1) / 2;
    store.add(layer.weight, {out, in, kernel, kernel}, weight_init);
    if (with_bias) {
        layer.bias = name + ".bias";
        store.add(layer.bias, {out}, Init::zeros());
    }
    return layer;
}

Tensor Conv2dLayer::forward(const ParamStore& store, const Tensor& x) const {
    if (bias.empty()) return conv2d(x, store.at(weight), stride, pad);
    return conv2d(x, store.at(weight), store.at(bias), stride, pad);
}

LinearLayer LinearLayer::create(ParamStore& store, const std::string& name, std::int64_t in, std::int64_t out,
                                bool with_bias, Init weight_init) {
    LinearLayer layer;
    layer.weight = name + ".weight";
    layer.in_features = in;
    layer.out_features = out;
    store.add(layer.weight, {out, in}, weight_init);
    if (with_bias) {
        layer.bias = name + ".bias";
        store.add(layer.bias, {out}, Init::zeros());
    }
    return layer;
}

Tensor LinearLayer::forward(const ParamStore& store, const Tensor& x) const {
    if (bias.empty()) return fc(x, store.at(weight));
    return fc(x, store.at(weight), store.at(bias));
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
