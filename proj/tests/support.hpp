// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "scarf/nn.hpp"
#include "scarf/tensor.hpp"

namespace scarf::testing {

inline Tensor random_tensor(const Shape& dims, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<Real> v(static_cast<std::size_t>(shape_numel(dims)));
    for (auto& x : v) x = static_cast<Real>(u(rng));
    return Tensor(dims, std::move(v));
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) { return a.dims() == b.dims() && a.values() == b.values(); }

/// Sets every parameter whose name starts with `prefix` to zero.
inline void zero_params(ParamStore& store, const std::string& prefix = "") {
    for (const auto& name : store.names()) {
        if (name.rfind(prefix, 0) == 0) {
            for (auto& v : store.mutable_values(name)) v = 0;
        }
    }
}

inline void fill_param(ParamStore& store, const std::string& name, Real value) {
    for (auto& v : store.mutable_values(name)) v = value;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("scarf_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace scarf::testing
