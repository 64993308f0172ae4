#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "gnnbench/errors.hpp"
#include "gnnbench/optim.hpp"

namespace gnnbench {

// Flat named-tensor checkpoint: magic, version, tensor count, then per tensor
// a length-prefixed name, the shape, and row-major doubles (host endianness).
// Parameter values only; optimizer moments are not part of the format.

inline constexpr char kCheckpointMagic[8] = {'G', 'N', 'N', 'B', 'C', 'K', 'P', 'T'};

inline void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write checkpoint " + path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    const std::uint32_t version = 1;
    const std::uint32_t count = static_cast<std::uint32_t>(params.params.size());
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const Param& p : params.params) {
        const std::uint32_t name_len = static_cast<std::uint32_t>(p.name.size());
        out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
        out.write(p.name.data(), name_len);
        const std::int32_t rows = p.value.rows, cols = p.value.cols;
        out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
        out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
        out.write(reinterpret_cast<const char*>(p.value.data.data()),
                  static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
}

// Restores values into an existing ParamSet; names, order, and shapes must
// match the architecture that wrote the file.
inline void load_checkpoint(ParamSet& params, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw ValidationError(path.string() + ": not a checkpoint file");
    std::uint32_t version = 0, count = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || version != 1)
        throw ValidationError(path.string() + ": unsupported checkpoint version");
    if (count != params.params.size())
        throw ValidationError(path.string() + ": parameter count mismatch");
    for (Param& p : params.params) {
        std::uint32_t name_len = 0;
        in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        std::int32_t rows = 0, cols = 0;
        in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
        in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
        if (!in || name != p.name || rows != p.value.rows || cols != p.value.cols)
            throw ValidationError(path.string() + ": tensor '" + name +
                                  "' does not match parameter '" + p.name + "'");
        in.read(reinterpret_cast<char*>(p.value.data.data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(double)));
        if (!in) throw ValidationError(path.string() + ": truncated checkpoint");
    }
}

}  // namespace gnnbench
