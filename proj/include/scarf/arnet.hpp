// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "scarf/backbone.hpp"
#include "scarf/nn.hpp"
#include "scarf/scnet.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

enum class CombineMode { ChannelConcat, ElementAdd };

std::string_view to_string(CombineMode mode);
CombineMode parse_combine_mode(std::string_view s);

/// Channels of a redistributed level after combining with an original level of
/// `original` channels.
std::int64_t combined_channels(CombineMode mode, std::int64_t original, std::int64_t redistributed);
/// X_l (+) M_l under `mode`.
Tensor combine(CombineMode mode, const Tensor& original, const Tensor& redistributed);

/// Squeeze-excitation block: sigmoid(fc2(relu(fc1(GAP(z))))).
class SeBlock {
public:
    SeBlock(ParamStore& store, const std::string& prefix, std::int64_t channels, std::int64_t reduction);

    /// Attention weights, one per channel of `z`, each in (0, 1).
    Tensor attention(const ParamStore& store, const Tensor& z) const;
    /// Pre-sigmoid attention logits.
    Tensor logits(const ParamStore& store, const Tensor& z) const;

    std::int64_t channels() const { return channels_; }
    const LinearLayer& fc1() const { return fc1_; }
    const LinearLayer& fc2() const { return fc2_; }

private:
    std::int64_t channels_;
    LinearLayer fc1_, fc2_;
};

/// Shorthand for SeBlock::attention.
Tensor se_attention(const ParamStore& store, const SeBlock& block, const Tensor& z);

struct ArNetConfig {
    CombineMode mode = CombineMode::ChannelConcat;
    bool attention = true;
    std::int64_t reduction = 4;
    /// Redistributed channels per level; empty means "same as the original level".
    std::vector<std::int64_t> out_channels;
};

/// Attentive redistribution: concatenate the fused stack, apply channel
/// attention, resize to every pyramid level, 1x1-convolve and combine with the
/// original level.
class ArNet {
public:
    /// `fused_channels` is the total channel count of the concatenated stack.
    ArNet(ParamStore& store, const PyramidSpec& spec, std::int64_t fused_channels, const ArNetConfig& cfg,
          const std::string& prefix = "arnet");

    PyramidFeatures forward(const ParamStore& store, const FusedFeatures& fused, const PyramidFeatures& pyramid) const;
    /// Redistributes an already concatenated stack z[fused_channels, H, W].
    PyramidFeatures redistribute(const ParamStore& store, const Tensor& z, const PyramidFeatures& pyramid) const;

    const ArNetConfig& config() const { return cfg_; }
    const SeBlock* se() const { return cfg_.attention ? &se_.front() : nullptr; }
    const Conv2dLayer& output_conv(int level) const { return convs_.at(static_cast<std::size_t>(level)); }
    std::vector<std::int64_t> output_channels() const;

private:
    ArNetConfig cfg_;
    std::int64_t fused_channels_;
    std::vector<std::int64_t> original_channels_;
    std::vector<SeBlock> se_;  // zero or one
    std::vector<Conv2dLayer> convs_;
};

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
