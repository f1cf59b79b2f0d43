// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/scnet.hpp"

#include <algorithm>

#include "scarf/ops.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

MatchingBlock::MatchingBlock(ParamStore& store, const std::string& prefix, const std::vector<std::int64_t>& level_channels,
                             std::int64_t d, std::int64_t target_h, std::int64_t target_w)
    : d_(d), h_(target_h), w_(target_w) {
    if (d < 1) throw ConfigError("matching block channel dimension must be positive");
    for (std::size_t l = 0; l < level_channels.size(); ++l) {
        convs_.push_back(Conv2dLayer::create(store, prefix + ".level" + std::to_string(l), level_channels[l], d, 1));
    }
}

const Conv2dLayer& MatchingBlock::conv(int level) const {
    if (level < 0 || level >= levels()) {
        throw ArgumentError("matching block has no level " + std::to_string(level));
    }
    return convs_[static_cast<std::size_t>(level)];
}

Tensor MatchingBlock::forward(const ParamStore& store, const Tensor& x, int level) const {
    const Conv2dLayer& c = conv(level);
    const Tensor resized = (x.dim(1) == h_ && x.dim(2) == w_) ? x : bilinear_resize(x, h_, w_);
    return c.forward(store, resized);
}

ConvLstmCell ConvLstmCell::create(ParamStore& store, const std::string& prefix, std::int64_t d) {
    ConvLstmCell c;
    c.d = d;
    auto name = [&](const char* s) { return prefix + "." + s; };
    c.w_xi = name("w_xi");
    c.w_hi = name("w_hi");
    c.w_xf = name("w_xf");
    c.w_hf = name("w_hf");
    c.w_xo = name("w_xo");
    c.w_ho = name("w_ho");
    c.b_i = name("b_i");
    c.b_f = name("b_f");
    c.b_o = name("b_o");
    c.w_xc = name("w_xc");
    c.w_hc = name("w_hc");
    c.b_c = name("b_c");
    for (const auto* w : {&c.w_xi, &c.w_hi, &c.w_xf, &c.w_hf, &c.w_xo, &c.w_ho}) store.add(*w, {d, d});
    store.add(c.b_i, {d}, Init::zeros());
    store.add(c.b_f, {d}, Init::constant(1));
    store.add(c.b_o, {d}, Init::zeros());
    store.add(c.w_xc, {d, d, 3, 3});
    store.add(c.w_hc, {d, d, 3, 3});
    store.add(c.b_c, {d}, Init::zeros());
    return c;
}

std::vector<std::string> ConvLstmCell::parameter_names() const {
    return {w_xi, w_hi, w_xf, w_hf, w_xo, w_ho, b_i, b_f, b_o, w_xc, w_hc, b_c};
}

LstmState LstmState::zeros(std::int64_t d, std::int64_t h, std::int64_t w) {
    return {Tensor::zeros({d, h, w}), Tensor::zeros({d, h, w})};
}

LstmState lstm_step(const ParamStore& store, const ConvLstmCell& cell, const Tensor& x, const LstmState& prev,
                    LstmGates* gates) {
    if (x.rank() != 3 || x.dim(0) != cell.d) {
        throw ShapeError("lstm_step: input " + shape_str(x.dims()) + " does not have " + std::to_string(cell.d) + " channels");
    }
    if (prev.cell.dims() != x.dims() || prev.hidden.dims() != x.dims()) {
        throw ShapeError("lstm_step: state " + shape_str(prev.hidden.dims()) + " does not match input " + shape_str(x.dims()));
    }
    const Tensor x_pool = global_avg_pool(x);
    const Tensor h_pool = global_avg_pool(prev.hidden);
    auto gate = [&](const std::string& wx, const std::string& wh, const std::string& b) {
        return sigmoid(add(fc(x_pool, store.at(wx), store.at(b)), fc(h_pool, store.at(wh))));
    };
    const Tensor i = gate(cell.w_xi, cell.w_hi, cell.b_i);
    const Tensor f = gate(cell.w_xf, cell.w_hf, cell.b_f);
    const Tensor o = gate(cell.w_xo, cell.w_ho, cell.b_o);
    const Tensor g = tanh(add(conv2d(x, store.at(cell.w_xc), store.at(cell.b_c), 1, 1), conv2d(prev.hidden, store.at(cell.w_hc), 1, 1)));
    LstmState next;
    next.cell = add(hadamard(prev.cell, f), hadamard(g, i));
    next.hidden = hadamard(tanh(next.cell), o);
    if (gates) *gates = {i, f, o, g};
    return next;
}

std::vector<Tensor> lstm_sweep(const ParamStore& store, const ConvLstmCell& cell, const std::vector<Tensor>& inputs) {
    std::vector<Tensor> out;
    if (inputs.empty()) return out;
    LstmState state = LstmState::zeros(cell.d, inputs.front().dim(1), inputs.front().dim(2));
    for (const auto& x : inputs) {
        state = lstm_step(store, cell, x, state);
        out.push_back(state.hidden);
    }
    return out;
}

FusedFeatures bilstm_sweep(const ParamStore& store, const std::vector<Tensor>& matched, const ConvLstmCell& forward_cell,
                           const ConvLstmCell* backward_cell) {
    FusedFeatures fused;
    const std::vector<Tensor> fwd = lstm_sweep(store, forward_cell, matched);
    if (!backward_cell) {
        fused.levels = fwd;
        return fused;
    }
    const std::vector<Tensor> reversed(matched.rbegin(), matched.rend());
    std::vector<Tensor> bwd = lstm_sweep(store, *backward_cell, reversed);
    std::reverse(bwd.begin(), bwd.end());
    for (std::size_t l = 0; l < matched.size(); ++l) {
        const Tensor both[] = {fwd[l], bwd[l]};
        fused.levels.push_back(concat_channels(both));
    }
    return fused;
}

ScNet::ScNet(ParamStore& store, const PyramidSpec& spec, const ScNetConfig& cfg, const std::string& prefix)
    : cfg_(cfg),
      prefix_(prefix),
      matching_(store, prefix + ".match", spec.level_channels(), cfg.d, spec.height(0), spec.width(0)),
      forward_(ConvLstmCell::create(store, prefix + ".lstm.fwd", cfg.d)) {
    if (spec.k < 2) throw ArgumentError("ScNet needs at least two pyramid levels");
    if (cfg.bidirectional) backward_ = ConvLstmCell::create(store, prefix + ".lstm.bwd", cfg.d);
}

std::vector<Tensor> ScNet::match(const ParamStore& store, const PyramidFeatures& pyramid) const {
    if (pyramid.k() < 2) throw ArgumentError("ScNet needs at least two pyramid levels");
    if (pyramid.k() != matching_.levels()) {
        throw ArgumentError("ScNet configured for " + std::to_string(matching_.levels()) + " levels, got " +
                            std::to_string(pyramid.k()));
    }
    std::vector<Tensor> matched;
    for (int l = 0; l < pyramid.k(); ++l) matched.push_back(matching_.forward(store, pyramid.levels[static_cast<std::size_t>(l)], l));
    return matched;
}

FusedFeatures ScNet::forward(const ParamStore& store, const PyramidFeatures& pyramid) const {
    return bilstm_sweep(store, match(store, pyramid), forward_, backward_cell());
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
