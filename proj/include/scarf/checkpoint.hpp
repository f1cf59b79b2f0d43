// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint layout (all integers little-endian):
//   "SCRF" | u32 version | u32 tensor count
//   per tensor: u16 name length | name | u8 rank | u32 dims[rank] | f32 data
//   u32 metadata length | JSON {"config": ..., "iteration": N}

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scarf/config.hpp"
#include "scarf/nn.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::vector<std::pair<std::string, Tensor>> tensors;
    TrainConfig config;
    std::int64_t iteration = 0;

    static Checkpoint from_store(const ParamStore& store, const TrainConfig& cfg, std::int64_t iteration);
    /// Copies every tensor into `store`; names and dims must match exactly.
    void load_into(ParamStore& store) const;
};

class CheckpointError : public std::runtime_error {
public:
    enum class Kind { BadMagic, UnsupportedVersion, Truncated, Malformed, Io };
    CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
