// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace scarf {
inline namespace SCARF_PRECISION_NS {

using Kind = CheckpointError::Kind;

Checkpoint Checkpoint::from_store(const ParamStore& store, const TrainConfig& cfg, std::int64_t iteration) {
    Checkpoint c;
    for (const auto& [name, value] : store.entries()) c.tensors.emplace_back(name, value.clone());
    c.config = cfg;
    c.iteration = iteration;
    return c;
}

void Checkpoint::load_into(ParamStore& store) const {
    if (tensors.size() != store.size()) {
        throw ShapeError("checkpoint holds " + std::to_string(tensors.size()) + " tensors but the model has " +
                         std::to_string(store.size()));
    }
    for (const auto& [name, value] : tensors) {
        if (!store.contains(name)) throw ShapeError("checkpoint tensor '" + name + "' does not exist in the model");
        if (store.at(name).dims() != value.dims()) {
            throw ShapeError("checkpoint tensor '" + name + "' has shape " + shape_str(value.dims()) + ", model expects " +
                             shape_str(store.at(name).dims()));
        }
        store.assign(name, value);
    }
}

namespace {

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}
    void bytes(const void* p, std::size_t n) { os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    template <typename T>
    void le(T v) {
        unsigned char buf[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(static_cast<std::uint64_t>(v) >> (8 * i));
        bytes(buf, sizeof(T));
    }

private:
    std::ostream& os_;
};

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}
    void bytes(void* p, std::size_t n, const char* what) {
        is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) {
            throw CheckpointError(Kind::Truncated, std::string("checkpoint truncated while reading ") + what);
        }
    }
    template <typename T>
    T le(const char* what) {
        unsigned char buf[sizeof(T)];
        bytes(buf, sizeof(T), what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return static_cast<T>(v);
    }

private:
    std::istream& is_;
};

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
    Writer w(os);
    w.bytes("SCRF", 4);
    w.le<std::uint32_t>(kCheckpointVersion);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw ArgumentError("tensor name too long: " + name);
        if (t.rank() > 255) throw ArgumentError("tensor rank too large: " + name);
        w.le<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.le<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
        for (auto d : t.dims()) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
        for (Real v : t.data()) w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    nlohmann::ordered_json meta;
    meta["config"] = to_json(ckpt.config);
    meta["iteration"] = ckpt.iteration;
    const std::string blob = meta.dump();
    w.le<std::uint32_t>(static_cast<std::uint32_t>(blob.size()));
    w.bytes(blob.data(), blob.size());
    if (!os) throw CheckpointError(Kind::Io, "failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& is) {
    Reader r(is);
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (std::memcmp(magic, "SCRF", 4) != 0) throw CheckpointError(Kind::BadMagic, "not a checkpoint (bad magic)");
    const auto version = r.le<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw CheckpointError(Kind::UnsupportedVersion, "unsupported checkpoint version " + std::to_string(version) +
                                                            " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const auto count = r.le<std::uint32_t>("tensor count");
    Checkpoint c;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name(r.le<std::uint16_t>("name length"), '\0');
        r.bytes(name.data(), name.size(), "tensor name");
        const auto rank = r.le<std::uint8_t>("rank");
        Shape dims;
        std::uint64_t numel = 1;
        for (int d = 0; d < rank; ++d) {
            dims.push_back(r.le<std::uint32_t>("dims"));
            numel *= static_cast<std::uint64_t>(dims.back());
            if (numel > (std::uint64_t{1} << 32)) throw CheckpointError(Kind::Malformed, "implausible tensor size for " + name);
        }
        std::vector<Real> values(numel);
        for (auto& v : values) v = static_cast<Real>(std::bit_cast<float>(r.le<std::uint32_t>("tensor data")));
        c.tensors.emplace_back(std::move(name), Tensor(std::move(dims), std::move(values)));
    }
    std::string blob(r.le<std::uint32_t>("metadata length"), '\0');
    r.bytes(blob.data(), blob.size(), "metadata");
    try {
        const auto meta = nlohmann::json::parse(blob);
        c.config = config_from_json(meta.at("config"));
        c.iteration = meta.at("iteration").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(Kind::Malformed, std::string("malformed checkpoint metadata: ") + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointError(Kind::Malformed, std::string("malformed checkpoint config: ") + e.what());
    }
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ostringstream buf(std::ios::binary);
    write_checkpoint(buf, ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError(Kind::Io, "cannot write " + path.string());
    const std::string bytes = buf.str();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError(Kind::Io, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(Kind::Io, "cannot open " + path.string());
    return read_checkpoint(in);
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
