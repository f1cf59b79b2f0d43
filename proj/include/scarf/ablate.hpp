// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scarf/config.hpp"
#include "scarf/train.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

struct AblationOptions {
    /// Fusion strategies compared on the base configuration.
    std::vector<FusionKind> kinds = all_fusion_kinds();
    /// Also sweep d in `grid_d` x {concat, add} for the full model.
    bool grid = false;
    std::vector<std::int64_t> grid_d{16, 32, 64};
};

struct AblationRow {
    std::string label;
    TrainConfig config;  // seed of the first run
    std::vector<double> maps;  // one per seed
    double mean = 0, stddev = 0;
};

struct AblationTable {
    std::vector<std::uint64_t> seeds;
    std::vector<AblationRow> rows;

    const AblationRow& row(const std::string& label) const;
};

/// Sample mean and standard deviation (n - 1 denominator; 0 for one value).
std::pair<double, double> mean_std(const std::vector<double>& xs);

/// Trains every row once per seed (base.seed + s, s < seeds) on one shared
/// dataset. Progress lines go to `progress` when given.
AblationTable ablate(const TrainConfig& base, int seeds, const AblationOptions& options = {}, std::ostream* progress = nullptr);
/// As above with pre-built data.
AblationTable ablate(const TrainConfig& base, int seeds, const AblationOptions& options, const Datasets& data,
                     std::ostream* progress = nullptr);

std::string format_table(const AblationTable& table);
nlohmann::ordered_json to_json(const AblationTable& table);

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
