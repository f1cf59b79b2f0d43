// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "scarf/ops.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

namespace {

constexpr double kCenterVariance = 0.1;
constexpr double kSizeVariance = 0.2;
// exp() argument cap for decoded sizes.
constexpr double kMaxLogScale = 4.0;

}  // namespace

double iou(const Box& a, const Box& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

std::vector<Anchor> generate_anchors(const PyramidSpec& spec, const AnchorConfig& cfg) {
    std::vector<Anchor> anchors;
    for (int l = 0; l < spec.k; ++l) {
        const double stride = static_cast<double>(spec.stride(l));
        const double side = cfg.scale * stride;
        for (std::int64_t y = 0; y < spec.height(l); ++y) {
            for (std::int64_t x = 0; x < spec.width(l); ++x) {
                for (double ar : cfg.aspects) {
                    const double r = std::sqrt(ar);
                    anchors.push_back({l, (static_cast<double>(x) + 0.5) * stride, (static_cast<double>(y) + 0.5) * stride,
                                       side * r, side / r});
                }
            }
        }
    }
    return anchors;
}

std::array<double, 4> encode_box(const Anchor& a, const Box& b) {
    const double cx = (b.x1 + b.x2) / 2, cy = (b.y1 + b.y2) / 2;
    return {(cx - a.cx) / a.w / kCenterVariance, (cy - a.cy) / a.h / kCenterVariance,
            std::log(b.width() / a.w) / kSizeVariance, std::log(b.height() / a.h) / kSizeVariance};
}

Box decode_box(const Anchor& a, std::span<const Real> t) {
    const double cx = a.cx + static_cast<double>(t[0]) * kCenterVariance * a.w;
    const double cy = a.cy + static_cast<double>(t[1]) * kCenterVariance * a.h;
    const double w = a.w * std::exp(std::min(static_cast<double>(t[2]) * kSizeVariance, kMaxLogScale));
    const double h = a.h * std::exp(std::min(static_cast<double>(t[3]) * kSizeVariance, kMaxLogScale));
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

std::int64_t MatchResult::num_positive() const {
    return std::count_if(labels.begin(), labels.end(), [](int l) { return l > 0; });
}

MatchResult match_anchors(std::span<const Anchor> anchors, std::span<const GroundTruth> gts, double pos_thr, double neg_thr) {
    if (!(0 <= neg_thr && neg_thr <= pos_thr && pos_thr <= 1)) {
        throw ArgumentError("match_anchors: thresholds must satisfy 0 <= neg <= pos <= 1");
    }
    const std::size_t N = anchors.size(), G = gts.size();
    MatchResult m;
    m.labels.assign(N, MatchResult::kBackground);
    m.gt_index.assign(N, -1);
    m.targets.assign(N, {0, 0, 0, 0});
    if (G == 0) return m;

    std::vector<double> overlap(N * G);
    for (std::size_t a = 0; a < N; ++a) {
        const Box ab = anchors[a].box();
        for (std::size_t g = 0; g < G; ++g) overlap[a * G + g] = iou(ab, gts[g].box);
    }
    for (std::size_t a = 0; a < N; ++a) {
        std::size_t best = 0;
        for (std::size_t g = 1; g < G; ++g) {
            if (overlap[a * G + g] > overlap[a * G + best]) best = g;
        }
        const double v = overlap[a * G + best];
        if (v >= pos_thr) {
            m.gt_index[a] = static_cast<int>(best);
        } else if (v >= neg_thr) {
            m.labels[a] = MatchResult::kIgnore;
        }
    }
    // Forced matches; iterate in reverse so lower box indices win shared anchors.
    for (std::size_t gi = G; gi-- > 0;) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < N; ++a) {
            if (overlap[a * G + gi] > overlap[best * G + gi]) best = a;
        }
        if (overlap[best * G + gi] > 0) m.gt_index[best] = static_cast<int>(gi);
    }
    for (std::size_t a = 0; a < N; ++a) {
        const int g = m.gt_index[a];
        if (g < 0) continue;
        m.labels[a] = gts[static_cast<std::size_t>(g)].label + 1;
        m.targets[a] = encode_box(anchors[a], gts[static_cast<std::size_t>(g)].box);
    }
    return m;
}

DetectionHead::DetectionHead(ParamStore& store, const std::vector<std::int64_t>& in_channels, int anchors_per_cell,
                             int num_classes, const std::string& prefix)
    : anchors_per_cell_(anchors_per_cell), num_classes_(num_classes) {
    if (anchors_per_cell < 1 || num_classes < 1) throw ConfigError("detection head needs anchors and classes");
    for (std::size_t l = 0; l < in_channels.size(); ++l) {
        const std::string name = prefix + ".level" + std::to_string(l);
        cls_.push_back(Conv2dLayer::create(store, name + ".cls", in_channels[l], anchors_per_cell * (num_classes + 1), 3));
        reg_.push_back(Conv2dLayer::create(store, name + ".reg", in_channels[l], anchors_per_cell * 4, 3));
    }
}

HeadOutput DetectionHead::forward(const ParamStore& store, const Tensor& x, int level) const {
    if (level < 0 || level >= static_cast<int>(cls_.size())) throw ArgumentError("detection head has no level " + std::to_string(level));
    const auto& c = cls_[static_cast<std::size_t>(level)];
    if (x.rank() != 3 || x.dim(0) != c.in_channels) {
        throw ShapeError("detection head level " + std::to_string(level) + " expects " + std::to_string(c.in_channels) +
                         " channels, got " + shape_str(x.dims()));
    }
    return {c.forward(store, x), reg_[static_cast<std::size_t>(level)].forward(store, x)};
}

HeadRows flatten_heads(std::span<const HeadOutput> heads, int anchors_per_cell) {
    std::vector<Tensor> logits, offsets;
    for (const auto& h : heads) {
        logits.push_back(head_rows(h.cls, anchors_per_cell));
        offsets.push_back(head_rows(h.reg, anchors_per_cell));
    }
    return {concat_rows(logits), concat_rows(offsets)};
}

LossTerms detection_loss_terms(std::span<const HeadOutput> heads, int anchors_per_cell, const MatchResult& match,
                               int neg_pos_ratio) {
    const HeadRows rows = flatten_heads(heads, anchors_per_cell);
    const auto N = rows.logits.dim(0);
    if (static_cast<std::int64_t>(match.labels.size()) != N) {
        throw ShapeError("detection_loss: " + std::to_string(match.labels.size()) + " matched anchors for " +
                         std::to_string(N) + " predictions");
    }
    std::vector<std::int64_t> positives, candidates;
    for (std::int64_t a = 0; a < N; ++a) {
        const int l = match.labels[static_cast<std::size_t>(a)];
        if (l > 0) positives.push_back(a);
        else if (l == MatchResult::kBackground) candidates.push_back(a);
    }

    // Hard negatives: background anchors with the highest background CE.
    std::vector<int> background(static_cast<std::size_t>(N), 0);
    const std::vector<Real> bg_loss = row_cross_entropy(rows.logits.detached(), background);
    const auto want = static_cast<std::size_t>(neg_pos_ratio) * std::max<std::size_t>(positives.size(), 1);
    const std::size_t take = std::min(want, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      [&](std::int64_t a, std::int64_t b) {
                          const Real la = bg_loss[static_cast<std::size_t>(a)], lb = bg_loss[static_cast<std::size_t>(b)];
                          return la != lb ? la > lb : a < b;
                      });
    candidates.resize(take);

    std::vector<std::int64_t> selected = positives;
    selected.insert(selected.end(), candidates.begin(), candidates.end());
    std::sort(selected.begin(), selected.end());

    LossTerms terms;
    terms.num_positive = static_cast<std::int64_t>(positives.size());
    terms.num_negative = static_cast<std::int64_t>(candidates.size());
    if (selected.empty()) {
        terms.cls_sum = Tensor::scalar(0);
    } else {
        std::vector<int> labels;
        for (auto a : selected) labels.push_back(match.labels[static_cast<std::size_t>(a)]);
        terms.cls_sum = scale(softmax_cross_entropy(gather_rows(rows.logits, selected), labels), static_cast<Real>(selected.size()));
    }
    if (positives.empty()) {
        terms.reg_sum = Tensor::scalar(0);
    } else {
        std::vector<Real> target;
        for (auto a : positives) {
            for (double v : match.targets[static_cast<std::size_t>(a)]) target.push_back(static_cast<Real>(v));
        }
        const auto P = static_cast<std::int64_t>(positives.size());
        terms.reg_sum = scale(smooth_l1(gather_rows(rows.offsets, positives), Tensor({P, 4}, std::move(target))),
                              static_cast<Real>(4 * P));
    }
    return terms;
}

Tensor detection_loss(std::span<const HeadOutput> heads, int anchors_per_cell, const MatchResult& match) {
    const LossTerms t = detection_loss_terms(heads, anchors_per_cell, match);
    const Real norm = static_cast<Real>(std::max<std::int64_t>(t.num_positive, 1));
    return scale(add(t.cls_sum, t.reg_sum), Real(1) / norm);
}

namespace {

bool ranks_before(const ScoredBox& a, const ScoredBox& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
}

}  // namespace

std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes, double iou_thr) {
    std::sort(boxes.begin(), boxes.end(), ranks_before);
    std::vector<ScoredBox> kept;
    for (const auto& b : boxes) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(b.box, k.box) > iou_thr) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(b);
    }
    return kept;
}

std::vector<Detection> decode_nms(std::span<const HeadOutput> heads, std::span<const Anchor> anchors, int anchors_per_cell,
                                  double image_w, double image_h, const NmsParams& params) {
    const HeadRows rows = flatten_heads(heads, anchors_per_cell);
    const auto N = rows.logits.dim(0), C = rows.logits.dim(1);
    if (static_cast<std::int64_t>(anchors.size()) != N) {
        throw ShapeError("decode_nms: " + std::to_string(anchors.size()) + " anchors for " + std::to_string(N) + " predictions");
    }
    const Tensor probs = softmax_rows(rows.logits);
    auto pv = probs.data();
    auto ov = rows.offsets.data();

    std::vector<Box> decoded(static_cast<std::size_t>(N));
    std::vector<bool> usable(static_cast<std::size_t>(N));
    for (std::int64_t a = 0; a < N; ++a) {
        Box b = decode_box(anchors[static_cast<std::size_t>(a)], ov.subspan(static_cast<std::size_t>(a * 4), 4));
        b.x1 = std::clamp(b.x1, 0.0, image_w);
        b.x2 = std::clamp(b.x2, 0.0, image_w);
        b.y1 = std::clamp(b.y1, 0.0, image_h);
        b.y2 = std::clamp(b.y2, 0.0, image_h);
        decoded[static_cast<std::size_t>(a)] = b;
        usable[static_cast<std::size_t>(a)] = b.valid();
    }

    struct Ranked {
        Detection det;
        std::int64_t index;
    };
    std::vector<Ranked> all;
    for (std::int64_t c = 1; c < C; ++c) {
        std::vector<ScoredBox> cand;
        for (std::int64_t a = 0; a < N; ++a) {
            const double s = static_cast<double>(pv[static_cast<std::size_t>(a * C + c)]);
            if (s >= params.conf_thr && usable[static_cast<std::size_t>(a)]) cand.push_back({decoded[static_cast<std::size_t>(a)], s, a});
        }
        for (const auto& k : nms(std::move(cand), params.iou_thr)) {
            all.push_back({{static_cast<int>(c - 1), k.score, k.box}, k.index});
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
        if (a.det.score != b.det.score) return a.det.score > b.det.score;
        return a.index < b.index;
    });
    if (all.size() > params.top_k) all.resize(params.top_k);
    std::vector<Detection> out;
    out.reserve(all.size());
    for (auto& r : all) out.push_back(r.det);
    return out;
}

double average_precision(const std::vector<bool>& is_tp, std::int64_t num_gt) {
    if (num_gt <= 0 || is_tp.empty()) return 0.0;
    const std::size_t n = is_tp.size();
    std::vector<double> recall(n + 2), precision(n + 2);
    recall[0] = 0;
    precision[0] = 0;
    double tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_tp[i]) tp += 1;
        recall[i + 1] = tp / static_cast<double>(num_gt);
        precision[i + 1] = tp / static_cast<double>(i + 1);
    }
    recall[n + 1] = 1;
    precision[n + 1] = 0;
    for (std::size_t i = n + 1; i-- > 0;) precision[i] = std::max(precision[i], precision[i + 1]);
    double ap = 0;
    for (std::size_t i = 0; i + 1 < n + 2; ++i) {
        if (recall[i + 1] != recall[i]) ap += (recall[i + 1] - recall[i]) * precision[i + 1];
    }
    return ap;
}

MapReport eval_map(std::span<const std::vector<Detection>> detections, std::span<const std::vector<GroundTruth>> gts,
                   int num_classes, double iou_thr) {
    if (detections.size() != gts.size()) throw ArgumentError("eval_map: detections and ground truth cover different image counts");
    MapReport report;
    report.ap.assign(static_cast<std::size_t>(num_classes), std::nullopt);
    report.gt_count.assign(static_cast<std::size_t>(num_classes), 0);
    for (const auto& img : gts) {
        for (const auto& g : img) {
            if (g.label < 0 || g.label >= num_classes) throw ArgumentError("eval_map: ground-truth class out of range");
            ++report.gt_count[static_cast<std::size_t>(g.label)];
        }
    }
    double total = 0;
    int counted = 0;
    for (int c = 0; c < num_classes; ++c) {
        struct Entry {
            double score;
            std::size_t image, pos;
        };
        std::vector<Entry> ranked;
        for (std::size_t i = 0; i < detections.size(); ++i) {
            for (std::size_t j = 0; j < detections[i].size(); ++j) {
                const auto& d = detections[i][j];
                if (d.label < 0 || d.label >= num_classes) throw ArgumentError("eval_map: detection class out of range");
                if (d.label == c) ranked.push_back({d.score, i, j});
            }
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const Entry& a, const Entry& b) { return a.score > b.score; });
        std::vector<std::vector<bool>> claimed(gts.size());
        for (std::size_t i = 0; i < gts.size(); ++i) claimed[i].assign(gts[i].size(), false);
        std::vector<bool> is_tp;
        is_tp.reserve(ranked.size());
        for (const auto& e : ranked) {
            const Box& box = detections[e.image][e.pos].box;
            double best = -1;
            std::size_t best_g = 0;
            for (std::size_t g = 0; g < gts[e.image].size(); ++g) {
                if (gts[e.image][g].label != c) continue;
                const double v = iou(box, gts[e.image][g].box);
                if (v > best) {
                    best = v;
                    best_g = g;
                }
            }
            bool tp = false;
            if (best >= iou_thr && !claimed[e.image][best_g]) {
                claimed[e.image][best_g] = true;
                tp = true;
            }
            is_tp.push_back(tp);
        }
        const auto n_gt = report.gt_count[static_cast<std::size_t>(c)];
        if (n_gt == 0) continue;
        const double ap = average_precision(is_tp, n_gt);
        report.ap[static_cast<std::size_t>(c)] = ap;
        total += ap;
        ++counted;
    }
    report.map = counted ? total / counted : 0.0;
    return report;
}

void write_detections_jsonl(std::ostream& os, std::int64_t image_id, std::span<const Detection> dets) {
    for (const auto& d : dets) {
        nlohmann::json j = {{"image_id", image_id},
                            {"class", d.label},
                            {"score", d.score},
                            {"box", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}}};
        os << j.dump() << '\n';
    }
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
