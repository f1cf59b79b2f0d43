// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Semantic combining network: every pyramid level is brought to a common
// [d, H, W] shape by a matching block, then a bidirectional ConvLSTM sweeps
// across the levels. Gates are per-channel vectors computed from globally
// average-pooled inputs; the candidate state is a full spatial map.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scarf/backbone.hpp"
#include "scarf/nn.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

/// Bilinear resize to a target size followed by a per-level 1x1 convolution to `d` channels.
class MatchingBlock {
public:
    MatchingBlock(ParamStore& store, const std::string& prefix, const std::vector<std::int64_t>& level_channels,
                  std::int64_t d, std::int64_t target_h, std::int64_t target_w);

    Tensor forward(const ParamStore& store, const Tensor& x, int level) const;

    int levels() const { return static_cast<int>(convs_.size()); }
    std::int64_t channels() const { return d_; }
    const Conv2dLayer& conv(int level) const;

private:
    std::int64_t d_, h_, w_;
    std::vector<Conv2dLayer> convs_;
};

/// Parameter names of one ConvLSTM direction. The same weights are applied at
/// every pyramid level.
struct ConvLstmCell {
    std::int64_t d = 0;
    // Gate weights on the pooled input (x) and pooled previous output (h).
    std::string w_xi, w_hi, w_xf, w_hf, w_xo, w_ho;
    std::string b_i, b_f, b_o;
    // 3x3 candidate convolutions and bias.
    std::string w_xc, w_hc, b_c;

    /// Gate biases start at 0 except the forget gate, which starts at 1.
    static ConvLstmCell create(ParamStore& store, const std::string& prefix, std::int64_t d);
    std::vector<std::string> parameter_names() const;
};

struct LstmState {
    Tensor cell;    // C
    Tensor hidden;  // X^f of the previous step

    static LstmState zeros(std::int64_t d, std::int64_t h, std::int64_t w);
};

/// Intermediate values of one step, for inspection.
struct LstmGates {
    Tensor input, forget, output;  // [d]
    Tensor candidate;              // [d, H, W]
};

/// One ConvLSTM update:
///   i, f, o = sigmoid(W_x* GAP(x) + W_h* GAP(h_prev) + b_*)
///   G = tanh(W_xc * x + W_hc * h_prev + b_c)
///   C = f . C_prev + i . G,   H = o . tanh(C)
LstmState lstm_step(const ParamStore& store, const ConvLstmCell& cell, const Tensor& x, const LstmState& prev,
                    LstmGates* gates = nullptr);

/// Runs `cell` over `inputs` in the given order from a zero state and returns
/// the hidden output of each step.
std::vector<Tensor> lstm_sweep(const ParamStore& store, const ConvLstmCell& cell, const std::vector<Tensor>& inputs);

/// Per-level output of the semantic combining network at the largest pyramid
/// resolution: [2d, H, W] when bidirectional (forward half first), [d, H, W] otherwise.
struct FusedFeatures {
    std::vector<Tensor> levels;
};

/// Forward sweep over `matched` with `forward_cell`, reverse sweep with
/// `backward_cell` (when given), concatenated per level.
FusedFeatures bilstm_sweep(const ParamStore& store, const std::vector<Tensor>& matched, const ConvLstmCell& forward_cell,
                           const ConvLstmCell* backward_cell);

struct ScNetConfig {
    std::int64_t d = 32;
    bool bidirectional = true;
};

class ScNet {
public:
    ScNet(ParamStore& store, const PyramidSpec& spec, const ScNetConfig& cfg, const std::string& prefix = "scnet");

    FusedFeatures forward(const ParamStore& store, const PyramidFeatures& pyramid) const;
    /// Matched inputs of every level ([d, H, W] at the largest resolution).
    std::vector<Tensor> match(const ParamStore& store, const PyramidFeatures& pyramid) const;

    std::int64_t fused_channels() const { return cfg_.bidirectional ? 2 * cfg_.d : cfg_.d; }
    const MatchingBlock& matching() const { return matching_; }
    const ConvLstmCell& forward_cell() const { return forward_; }
    const ConvLstmCell* backward_cell() const { return backward_ ? &*backward_ : nullptr; }
    /// Prefix shared by the recurrent cell parameters (matching convs excluded).
    std::string cell_prefix() const { return prefix_ + ".lstm"; }

private:
    ScNetConfig cfg_;
    std::string prefix_;
    MatchingBlock matching_;
    ConvLstmCell forward_;
    std::optional<ConvLstmCell> backward_;
};

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
