// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scarf/tensor.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

struct Init {
    enum class Kind { KaimingUniform, Zeros, Constant };
    Kind kind = Kind::KaimingUniform;
    Real value = 0;

    static Init kaiming() { return {Kind::KaimingUniform, 0}; }
    static Init zeros() { return {Kind::Zeros, 0}; }
    static Init constant(Real c) { return {Kind::Constant, c}; }
};

/// Fan-in of a weight tensor: the product of every extent after the first
/// (the first extent for rank-1 tensors).
std::int64_t fan_in(const Shape& dims);

/// Deterministic in (dims, scheme, seed). Kaiming-uniform draws from
/// U(-sqrt(6 / fan_in), sqrt(6 / fan_in)).
Tensor init_tensor(const Shape& dims, Init scheme, std::uint64_t seed);

/// Seed of parameter `name` under store seed `seed`; independent of
/// registration order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

using GradientMap = std::unordered_map<std::string, Tensor>;

/// Named trainable tensors in registration order.
class ParamStore {
public:
    explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Registers a parameter initialised from the store seed and its name.
    const Tensor& add(const std::string& name, const Shape& dims, Init scheme = Init::kaiming());
    /// Registers a parameter with explicit values.
    const Tensor& add(const std::string& name, Tensor value);

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const Tensor& at(const std::string& name) const;
    /// Overwrites the values of an existing parameter (dims must match).
    void assign(const std::string& name, Tensor value);
    /// In-place access to the values of a parameter.
    std::span<Real> mutable_values(const std::string& name);

    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::vector<std::string> names() const;

    /// Tracks every parameter on `tape`; at() returns the tracked handles until
    /// detach() or the next watch().
    void watch(Tape& tape);
    void detach();
    /// Gradients of every parameter from a tape that has run backward().
    GradientMap gradients(const Tape& tape) const;

private:
    std::uint64_t seed_;
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Number of scalar parameters, optionally restricted to names starting with `prefix`.
std::int64_t param_count(const ParamStore& store, std::string_view prefix = {});

struct LrPhase {
    std::int64_t until;  // exclusive iteration bound
    double lr;
};

struct SgdConfig {
    std::vector<LrPhase> lr_schedule{{1200, 1e-2}, {1800, 1e-3}, {2000, 1e-4}};
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int batch_size = 8;

    /// Three-phase step decay: 60% / 30% / 10% of `iterations` at 1e-2, 1e-3, 1e-4.
    static std::vector<LrPhase> default_schedule(std::int64_t iterations);

    void validate() const;
    /// Learning rate of the first phase whose bound exceeds `iter`; the last
    /// phase extends past its bound.
    double lr_at(std::int64_t iter) const;
};

/// Momentum buffers, one per parameter.
struct SgdState {
    std::unordered_map<std::string, std::vector<Real>> velocity;
};

/// v <- momentum * v + grad + weight_decay * param;  param <- param - lr(iter) * v.
void sgd_step(ParamStore& store, const GradientMap& grads, const SgdConfig& cfg, std::int64_t iter, SgdState& state);

/// Convolution layer whose weights live in a ParamStore.
struct Conv2dLayer {
    std::string weight, bias;  // bias empty when disabled
    std::int64_t in_channels = 0, out_channels = 0;
    int kernel = 1, stride = 1, pad = 0;

    /// "Same" padding (kernel - 1) / 2.
    static Conv2dLayer create(ParamStore& store, const std::string& name, std::int64_t in, std::int64_t out, int kernel,
                              int stride = 1, bool with_bias = true, Init weight_init = Init::kaiming());
    Tensor forward(const ParamStore& store, const Tensor& x) const;
};

struct LinearLayer {
    std::string weight, bias;
    std::int64_t in_features = 0, out_features = 0;

    static LinearLayer create(ParamStore& store, const std::string& name, std::int64_t in, std::int64_t out,
                              bool with_bias = true, Init weight_init = Init::kaiming());
    Tensor forward(const ParamStore& store, const Tensor& x) const;
};

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
