// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Interchangeable multiscale fusion strategies. Each maps a pyramid to a
// pyramid with the same spatial extents per level.

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "scarf/arnet.hpp"
#include "scarf/backbone.hpp"
#include "scarf/nn.hpp"
#include "scarf/scnet.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

enum class FusionKind { Plain, ConvFusion, TopDown, UniLstm, ScarfNoAttention, ScarfFull };

std::string_view to_string(FusionKind kind);
FusionKind parse_fusion_kind(std::string_view s);
const std::vector<FusionKind>& all_fusion_kinds();

struct FusionConfig {
    FusionKind kind = FusionKind::ScarfFull;
    std::int64_t d = 32;
    CombineMode mode = CombineMode::ChannelConcat;
    /// Channel attention for the conv and unidirectional variants; the two
    /// Scarf kinds fix it (off / on).
    bool attention = true;
    std::int64_t reduction = 4;
    /// Channels of the redistributed maps per level; 0 keeps each level's own width.
    std::int64_t d_out = 0;
};

class Fusion {
public:
    virtual ~Fusion() = default;
    virtual FusionKind kind() const = 0;
    virtual PyramidFeatures forward(const ParamStore& store, const PyramidFeatures& pyramid) const = 0;
    /// Channels of every output level.
    virtual std::vector<std::int64_t> output_channels() const = 0;
};

/// Detector-facing channel contract of `cfg` on `spec`.
std::vector<std::int64_t> fusion_output_channels(const PyramidSpec& spec, const FusionConfig& cfg);

std::unique_ptr<Fusion> make_fusion(ParamStore& store, const PyramidSpec& spec, const FusionConfig& cfg,
                                    const std::string& prefix = "fusion");

/// The baseline pyramid, unchanged.
class PlainFusion final : public Fusion {
public:
    explicit PlainFusion(const PyramidSpec& spec) : channels_(spec.level_channels()) {}
    FusionKind kind() const override { return FusionKind::Plain; }
    PyramidFeatures forward(const ParamStore&, const PyramidFeatures& pyramid) const override { return pyramid; }
    std::vector<std::int64_t> output_channels() const override { return channels_; }

private:
    std::vector<std::int64_t> channels_;
};

/// Matched levels concatenated and mixed by one 1x1 convolution instead of the
/// recurrent sweep; redistribution as in ArNet.
class ConvFusion final : public Fusion {
public:
    ConvFusion(ParamStore& store, const PyramidSpec& spec, const FusionConfig& cfg, const std::string& prefix);
    FusionKind kind() const override { return FusionKind::ConvFusion; }
    PyramidFeatures forward(const ParamStore& store, const PyramidFeatures& pyramid) const override;
    std::vector<std::int64_t> output_channels() const override { return arnet_.output_channels(); }
    const ArNet& arnet() const { return arnet_; }
    const Conv2dLayer& mixer() const { return mixer_; }

private:
    MatchingBlock matching_;
    Conv2dLayer mixer_;
    ArNet arnet_;
};

/// Top-down pathway with lateral connections:
///   P_top = L(X_top);  P_l = L_l(X_l) + T_l(P_{l+1}),  T = 2x bilinear upsample + 1x1 conv.
/// P_l is combined with X_l under the configured mode.
class TopDownFusion final : public Fusion {
public:
    TopDownFusion(ParamStore& store, const PyramidSpec& spec, const FusionConfig& cfg, const std::string& prefix);
    FusionKind kind() const override { return FusionKind::TopDown; }
    PyramidFeatures forward(const ParamStore& store, const PyramidFeatures& pyramid) const override;
    /// The top-down maps P_l before combining with the pyramid.
    std::vector<Tensor> pathway(const ParamStore& store, const PyramidFeatures& pyramid) const;
    std::vector<std::int64_t> output_channels() const override;
    const Conv2dLayer& lateral(int level) const { return lateral_.at(static_cast<std::size_t>(level)); }
    /// Top-down connection feeding `level` from level + 1.
    const Conv2dLayer& topdown(int level) const { return topdown_.at(static_cast<std::size_t>(level)); }

private:
    CombineMode mode_;
    std::vector<std::int64_t> channels_, path_channels_;
    std::vector<Conv2dLayer> lateral_, topdown_;
};

/// ScNet followed by ArNet. Covers the unidirectional, attention-free and full variants.
class LstmFusion final : public Fusion {
public:
    LstmFusion(ParamStore& store, const PyramidSpec& spec, const FusionConfig& cfg, const std::string& prefix);
    FusionKind kind() const override { return kind_; }
    PyramidFeatures forward(const ParamStore& store, const PyramidFeatures& pyramid) const override;
    std::vector<std::int64_t> output_channels() const override { return arnet_.output_channels(); }
    const ScNet& scnet() const { return scnet_; }
    const ArNet& arnet() const { return arnet_; }

private:
    FusionKind kind_;
    ScNet scnet_;
    ArNet arnet_;
};

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
