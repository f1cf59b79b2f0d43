// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance criteria. Each check returns a verdict plus a one-line detail;
// this header stays free of library types because the gradient criterion is
// compiled against the double-precision build.

#pragma once

#include <filesystem>
#include <string>

namespace scarf::acceptance {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Context {
    std::filesystem::path workdir;
    std::filesystem::path cli;  // scarf executable; empty skips the CLI round trips
};

Verdict gradient_correctness(const Context& ctx);
Verdict lstm_and_arnet_fixtures(const Context& ctx);
Verdict parameter_sharing(const Context& ctx);
Verdict detection_metrology(const Context& ctx);
Verdict ablation_trend(const Context& ctx);
Verdict width_and_combine_grid(const Context& ctx);
Verdict heatmap_channel_selection(const Context& ctx);
Verdict determinism_and_io(const Context& ctx);

}  // namespace scarf::acceptance
