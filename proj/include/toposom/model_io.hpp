#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "toposom/dataset.hpp"
#include "toposom/trainer.hpp"

namespace toposom {

// ---------------------------------------------------------------------------
// Model file format (all fields little-endian):
//   magic "FSOMMODL" (8 bytes)
//   version      u32 = 1
//   P            u32 node count
//   d            u32 feature dimension
//   kind         u8  (0 rect, 1 hex, 2 mst, 3 rng)
//   grid_w       u32 (0 for graph kinds)
//   grid_h       u32 (0 for graph kinds)
//   weights      P*d float32, row-major
//   edge_count   u32 (0 for lattices)
//   edges        edge_count * (u32, u32) pairs
// ---------------------------------------------------------------------------

inline constexpr char kModelMagic[8] = {'F', 'S', 'O', 'M', 'M', 'O', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Atomic save: writes to a sibling temp file, then renames over the target.
inline void save_model(const SomModel& model, const std::filesystem::path& path) {
    const TopologySpec& spec = model.topology_state.spec;
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write model file: " + tmp.string());
        out.write(kModelMagic, 8);
        detail::write_le(out, kModelVersion);
        detail::write_le(out, static_cast<std::uint32_t>(model.weights.rows));
        detail::write_le(out, static_cast<std::uint32_t>(model.weights.cols));
        detail::write_le(out, static_cast<std::uint8_t>(spec.kind));
        const bool lattice = is_lattice(spec.kind);
        detail::write_le(out, static_cast<std::uint32_t>(lattice ? spec.grid_w : 0));
        detail::write_le(out, static_cast<std::uint32_t>(lattice ? spec.grid_h : 0));
        out.write(reinterpret_cast<const char*>(model.weights.values.data()),
                  static_cast<std::streamsize>(model.weights.values.size() * sizeof(float)));
        if (lattice) {
            detail::write_le(out, std::uint32_t{0});
        } else {
            const auto& edges = model.topology_state.edges;
            detail::write_le(out, static_cast<std::uint32_t>(edges.size()));
            for (const auto& [a, b] : edges) {
                detail::write_le(out, a);
                detail::write_le(out, b);
            }
        }
        if (!out) throw std::runtime_error("model write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Load a model for evaluation or continued use. Graph hop distances and
/// lattice coordinate distances are not stored; they are rebuilt lazily by
/// the first operation that needs them (evaluation needs only the weights).
inline SomModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kModelMagic, 8) != 0)
        throw std::runtime_error("not a model file (bad magic): " + path.string());
    const auto version = detail::read_le<std::uint32_t>(in);
    if (version != kModelVersion)
        throw std::runtime_error("unsupported model version " + std::to_string(version) + " in " +
                                 path.string());
    const auto p = detail::read_le<std::uint32_t>(in);
    const auto d = detail::read_le<std::uint32_t>(in);
    const auto kind_raw = detail::read_le<std::uint8_t>(in);
    const auto grid_w = detail::read_le<std::uint32_t>(in);
    const auto grid_h = detail::read_le<std::uint32_t>(in);
    if (!in || kind_raw > 3)
        throw std::runtime_error("corrupt model header: " + path.string());
    const auto kind = static_cast<TopologyKind>(kind_raw);

    SomModel model;
    model.weights = DataMatrix(p, d);
    in.read(reinterpret_cast<char*>(model.weights.values.data()),
            static_cast<std::streamsize>(model.weights.values.size() * sizeof(float)));
    const auto edge_count = detail::read_le<std::uint32_t>(in);
    if (!in) throw std::runtime_error("truncated model file: " + path.string());
    std::vector<Edge> edges;
    edges.reserve(edge_count);
    for (std::uint32_t e = 0; e < edge_count; ++e) {
        const auto a = detail::read_le<std::uint32_t>(in);
        const auto b = detail::read_le<std::uint32_t>(in);
        edges.emplace_back(a, b);
    }
    if (!in) throw std::runtime_error("truncated model file: " + path.string());

    if (is_lattice(kind)) {
        if (static_cast<std::uint64_t>(grid_w) * grid_h != p)
            throw std::runtime_error("corrupt model: lattice dimensions do not match node count");
        model.topology_state.spec = TopologySpec::lattice(kind, grid_w, grid_h);
    } else {
        model.topology_state.spec = TopologySpec::graph(kind, p);
        model.topology_state.edges = std::move(edges);
    }
    model.prev_update = DataMatrix(p, d);
    return model;
}

}  // namespace toposom
