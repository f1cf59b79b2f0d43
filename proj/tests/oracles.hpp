// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference implementations for the detection metrology.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "scarf/detector.hpp"

namespace scarf::oracle {

/// IoU of boxes with integer corners by counting unit cells.
inline double grid_iou(const Box& a, const Box& b) {
    const int lo_x = static_cast<int>(std::floor(std::min(a.x1, b.x1))), hi_x = static_cast<int>(std::ceil(std::max(a.x2, b.x2)));
    const int lo_y = static_cast<int>(std::floor(std::min(a.y1, b.y1))), hi_y = static_cast<int>(std::ceil(std::max(a.y2, b.y2)));
    auto covers = [](const Box& r, double x, double y) { return x > r.x1 && x < r.x2 && y > r.y1 && y < r.y2; };
    long inter = 0, uni = 0;
    for (int y = lo_y; y < hi_y; ++y) {
        for (int x = lo_x; x < hi_x; ++x) {
            const bool ia = covers(a, x + 0.5, y + 0.5), ib = covers(b, x + 0.5, y + 0.5);
            inter += ia && ib;
            uni += ia || ib;
        }
    }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Anchor labels by exhaustive search: threshold assignment first, then each
/// box's best anchor, with the lowest box index winning contested anchors.
inline std::vector<int> match_labels(const std::vector<Anchor>& anchors, const std::vector<GroundTruth>& gts, double pos, double neg) {
    std::vector<int> labels(anchors.size(), MatchResult::kBackground);
    std::vector<int> owner(anchors.size(), -1);
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        double best = -1;
        int arg = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            const double v = iou(anchors[a].box(), gts[g].box);
            if (v > best) {
                best = v;
                arg = static_cast<int>(g);
            }
        }
        if (arg < 0) continue;
        if (best >= pos) owner[a] = arg;
        else if (best >= neg) labels[a] = MatchResult::kIgnore;
    }
    for (std::size_t g = 0; g < gts.size(); ++g) {
        // Best anchor of box g; claimed unless a lower-index box wants the same anchor.
        std::size_t best_a = 0;
        for (std::size_t a = 0; a < anchors.size(); ++a) {
            if (iou(anchors[a].box(), gts[g].box) > iou(anchors[best_a].box(), gts[g].box)) best_a = a;
        }
        if (iou(anchors[best_a].box(), gts[g].box) <= 0) continue;
        bool contested = false;
        for (std::size_t h = 0; h < g; ++h) {
            std::size_t best_h = 0;
            for (std::size_t a = 0; a < anchors.size(); ++a) {
                if (iou(anchors[a].box(), gts[h].box) > iou(anchors[best_h].box(), gts[h].box)) best_h = a;
            }
            if (best_h == best_a && iou(anchors[best_h].box(), gts[h].box) > 0) contested = true;
        }
        if (!contested) owner[best_a] = static_cast<int>(g);
    }
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        if (owner[a] >= 0) labels[a] = gts[static_cast<std::size_t>(owner[a])].label + 1;
    }
    return labels;
}

/// Greedy NMS result characterised as the unique subset S of ranked boxes in
/// which no two members overlap by more than `thr` and every non-member is
/// overlapped by an earlier-ranked member. Found by enumerating all subsets.
inline std::vector<std::int64_t> nms_subset(std::vector<ScoredBox> boxes, double thr) {
    std::sort(boxes.begin(), boxes.end(), [](const ScoredBox& a, const ScoredBox& b) {
        return a.score != b.score ? a.score > b.score : a.index < b.index;
    });
    const std::size_t n = boxes.size();
    std::optional<std::vector<std::int64_t>> found;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            const bool in = mask & (1u << i);
            bool covered = false;
            for (std::size_t j = 0; j < i; ++j) {
                if ((mask & (1u << j)) && iou(boxes[i].box, boxes[j].box) > thr) covered = true;
            }
            ok = in ? !covered : covered;
        }
        if (!ok) continue;
        if (found) return {};  // not unique: signal failure with an empty result
        std::vector<std::int64_t> idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1u << i)) idx.push_back(boxes[i].index);
        }
        found = idx;
    }
    return found.value_or(std::vector<std::int64_t>{});
}

/// All-point AP written as the mean over ground truths of the best precision
/// reached at or after the rank where each is first recalled.
inline double ap_from_ranks(const std::vector<bool>& tp, std::int64_t num_gt) {
    if (num_gt <= 0) return 0.0;
    std::vector<double> precision(tp.size());
    double hits = 0;
    for (std::size_t i = 0; i < tp.size(); ++i) {
        hits += tp[i];
        precision[i] = hits / static_cast<double>(i + 1);
    }
    double total = 0;
    for (std::size_t i = 0; i < tp.size(); ++i) {
        if (tp[i]) total += *std::max_element(precision.begin() + static_cast<std::ptrdiff_t>(i), precision.end());
    }
    return total / static_cast<double>(num_gt);
}

/// Detections by direct evaluation: softmax and box decoding per anchor from
/// the raw head tensors, per-class subset-enumeration NMS, ranked merge, top-k.
/// `anchors` follow the (level, y, x, aspect) order of the heads.
inline std::vector<Detection> decode_nms(const std::vector<HeadOutput>& heads, const std::vector<Anchor>& anchors, int per_cell,
                                         double image_w, double image_h, const NmsParams& p) {
    struct Cand {
        int label;
        double score;
        Box box;
        std::int64_t anchor;
    };
    std::vector<std::vector<ScoredBox>> per_class;
    std::vector<Box> boxes;
    std::vector<std::vector<double>> probs;
    for (const auto& h : heads) {
        const auto H = h.cls.dim(1), W = h.cls.dim(2);
        const auto M = h.cls.dim(0) / per_cell;
        for (std::int64_t y = 0; y < H; ++y) {
            for (std::int64_t x = 0; x < W; ++x) {
                for (int g = 0; g < per_cell; ++g) {
                    std::vector<double> z;
                    for (std::int64_t m = 0; m < M; ++m) z.push_back(h.cls.at(g * M + m, y, x));
                    const double mx = *std::max_element(z.begin(), z.end());
                    double den = 0;
                    for (double v : z) den += std::exp(v - mx);
                    std::vector<double> pr;
                    for (double v : z) pr.push_back(std::exp(v - mx) / den);
                    probs.push_back(pr);
                    const Anchor& a = anchors[boxes.size()];
                    const double t0 = h.reg.at(g * 4 + 0, y, x), t1 = h.reg.at(g * 4 + 1, y, x);
                    const double t2 = h.reg.at(g * 4 + 2, y, x), t3 = h.reg.at(g * 4 + 3, y, x);
                    const double cx = a.cx + 0.1 * t0 * a.w, cy = a.cy + 0.1 * t1 * a.h;
                    const double w = a.w * std::exp(std::min(0.2 * t2, 4.0)), hh = a.h * std::exp(std::min(0.2 * t3, 4.0));
                    boxes.push_back({std::clamp(cx - w / 2, 0.0, image_w), std::clamp(cy - hh / 2, 0.0, image_h),
                                     std::clamp(cx + w / 2, 0.0, image_w), std::clamp(cy + hh / 2, 0.0, image_h)});
                }
            }
        }
    }
    std::vector<Cand> all;
    const std::size_t classes = probs.empty() ? 0 : probs[0].size() - 1;
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<ScoredBox> cand;
        for (std::size_t a = 0; a < boxes.size(); ++a) {
            if (probs[a][c + 1] >= p.conf_thr && boxes[a].x1 < boxes[a].x2 && boxes[a].y1 < boxes[a].y2) {
                cand.push_back({boxes[a], probs[a][c + 1], static_cast<std::int64_t>(a)});
            }
        }
        for (std::int64_t a : nms_subset(cand, p.iou_thr)) {
            all.push_back({static_cast<int>(c), probs[static_cast<std::size_t>(a)][c + 1], boxes[static_cast<std::size_t>(a)], a});
        }
    }
    std::sort(all.begin(), all.end(), [](const Cand& a, const Cand& b) {
        return a.score != b.score ? a.score > b.score : a.anchor < b.anchor;
    });
    std::vector<Detection> out;
    for (std::size_t i = 0; i < all.size() && i < p.top_k; ++i) out.push_back({all[i].label, all[i].score, all[i].box});
    return out;
}

/// mAP with detections ranked by (score desc, image, position), each claiming
/// its best-overlap same-class box when unclaimed and IoU >= thr, and AP taken
/// from ap_from_ranks.
inline double eval_map(const std::vector<std::vector<Detection>>& dets, const std::vector<std::vector<GroundTruth>>& gts,
                       int num_classes, double thr) {
    double total = 0;
    int counted = 0;
    for (int c = 0; c < num_classes; ++c) {
        std::int64_t num_gt = 0;
        for (const auto& img : gts) {
            for (const auto& g : img) num_gt += g.label == c;
        }
        if (num_gt == 0) continue;
        std::vector<std::pair<std::size_t, std::size_t>> order;
        for (std::size_t i = 0; i < dets.size(); ++i) {
            for (std::size_t j = 0; j < dets[i].size(); ++j) {
                if (dets[i][j].label == c) order.emplace_back(i, j);
            }
        }
        std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
            const double sa = dets[a.first][a.second].score, sb = dets[b.first][b.second].score;
            return sa != sb ? sa > sb : a < b;
        });
        std::vector<std::vector<bool>> used(gts.size());
        for (std::size_t i = 0; i < gts.size(); ++i) used[i].assign(gts[i].size(), false);
        std::vector<bool> tp;
        for (const auto& [i, j] : order) {
            std::optional<std::size_t> best;
            for (std::size_t g = 0; g < gts[i].size(); ++g) {
                if (gts[i][g].label != c) continue;
                if (!best || iou(dets[i][j].box, gts[i][g].box) > iou(dets[i][j].box, gts[i][*best].box)) best = g;
            }
            const bool hit = best && iou(dets[i][j].box, gts[i][*best].box) >= thr && !used[i][*best];
            if (hit) used[i][*best] = true;
            tp.push_back(hit);
        }
        total += ap_from_ranks(tp, num_gt);
        ++counted;
    }
    return counted ? total / counted : 0.0;
}

}  // namespace scarf::oracle
