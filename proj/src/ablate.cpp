// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/ablate.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace scarf {
inline namespace SCARF_PRECISION_NS {

const AblationRow& AblationTable::row(const std::string& label) const {
    for (const auto& r : rows) {
        if (r.label == label) return r;
    }
    throw ArgumentError("no ablation row '" + label + "'");
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1))};
}

namespace {

struct Cell {
    std::string label;
    TrainConfig cfg;
};

std::vector<Cell> plan(const TrainConfig& base, const AblationOptions& options) {
    std::vector<Cell> cells;
    for (FusionKind kind : options.kinds) {
        TrainConfig c = base;
        c.fusion = kind;
        cells.push_back({std::string(to_string(kind)), c});
    }
    if (options.grid) {
        for (std::int64_t d : options.grid_d) {
            for (CombineMode mode : {CombineMode::ChannelConcat, CombineMode::ElementAdd}) {
                TrainConfig c = base;
                c.fusion = FusionKind::ScarfFull;
                c.d = d;
                c.combine = mode;
                cells.push_back({"scarf d=" + std::to_string(d) + " " + std::string(to_string(mode)), c});
            }
        }
    }
    return cells;
}

}  // namespace

AblationTable ablate(const TrainConfig& base, int seeds, const AblationOptions& options, const Datasets& data,
                     std::ostream* progress) {
    if (seeds < 1) throw ArgumentError("ablate: seeds must be >= 1");
    base.validate();
    AblationTable table;
    for (int s = 0; s < seeds; ++s) table.seeds.push_back(base.seed + static_cast<std::uint64_t>(s));
    for (const Cell& cell : plan(base, options)) {
        AblationRow row;
        row.label = cell.label;
        row.config = cell.cfg;
        for (std::uint64_t seed : table.seeds) {
            TrainConfig c = cell.cfg;
            c.seed = seed;
            const TrainResult r = train(c, data.train, data.eval);
            row.maps.push_back(r.final_map);
            if (progress != nullptr) *progress << row.label << " seed " << seed << " mAP " << r.final_map << '\n' << std::flush;
        }
        std::tie(row.mean, row.stddev) = mean_std(row.maps);
        table.rows.push_back(std::move(row));
    }
    return table;
}

AblationTable ablate(const TrainConfig& base, int seeds, const AblationOptions& options, std::ostream* progress) {
    base.validate();
    return ablate(base, seeds, options, load_datasets(base), progress);
}

std::string format_table(const AblationTable& table) {
    std::size_t width = 6;
    for (const auto& r : table.rows) width = std::max(width, r.label.size());
    std::ostringstream os;
    char buf[64];
    os << std::string(width, ' ');
    for (auto seed : table.seeds) {
        std::snprintf(buf, sizeof(buf), "  seed %-4llu", static_cast<unsigned long long>(seed));
        os << buf;
    }
    os << "  mean +- std (mAP@0.5, %)\n";
    for (const auto& r : table.rows) {
        os << r.label << std::string(width - r.label.size(), ' ');
        for (double m : r.maps) {
            std::snprintf(buf, sizeof(buf), "  %9.2f", 100 * m);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), "  %6.2f +- %.2f\n", 100 * r.mean, 100 * r.stddev);
        os << buf;
    }
    return os.str();
}

nlohmann::ordered_json to_json(const AblationTable& table) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : table.rows) {
        nlohmann::ordered_json j;
        j["label"] = r.label;
        j["fusion"] = std::string(to_string(r.config.fusion));
        j["d"] = r.config.d;
        j["combine"] = std::string(to_string(r.config.combine));
        j["map"] = r.maps;
        j["mean"] = r.mean;
        j["std"] = r.stddev;
        rows.push_back(j);
    }
    nlohmann::ordered_json j;
    j["seeds"] = table.seeds;
    j["rows"] = rows;
    return j;
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
