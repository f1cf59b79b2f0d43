// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <sstream>

#include "../gradcheck.hpp"
#include "criteria.hpp"

namespace scarf::acceptance {

Verdict gradient_correctness(const Context&) {
    constexpr int kSeeds = 20;
    constexpr double kTolerance = 1e-4;
    const auto start = std::chrono::steady_clock::now();
    double worst = 0;
    std::string worst_case;
    std::int64_t checked = 0;
    int failures = 0;
    for (const auto& c : gradcheck::cases()) {
        const gradcheck::Report r = gradcheck::run(c, kSeeds);
        checked += r.checked;
        if (!(r.max_rel < kTolerance)) ++failures;
        if (r.max_rel >= worst) {
            worst = r.max_rel;
            worst_case = c.name + " " + r.worst;
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream os;
    os << gradcheck::cases().size() << " functions x " << kSeeds << " seeds, " << checked << " partials, max rel err "
       << worst << " (" << worst_case << "), " << seconds << " s";
    return {failures == 0 && seconds < 60.0, os.str()};
}

}  // namespace scarf::acceptance
