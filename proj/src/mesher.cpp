#include "udfmesh/mesher.hpp"

#include "udfmesh/errors.hpp"
#include "udfmesh/signconfig.hpp"
#include "udfmesh/threads.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace udfmesh {

namespace {

// Lattice edge key: owning (lower) vertex plus axis.
std::uint64_t edge_key(int vi, int vj, int vk, int axis) {
    return (static_cast<std::uint64_t>(axis) << 60) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(vi)) << 40) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(vj) & 0xFFFFF) << 20) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(vk) & 0xFFFFF));
}

} // namespace

TriangleMesh mesh_cells(const GridSpec& spec, const std::vector<PseudoCell>& cells) {
    const McTables& tables = McTables::instance();
    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;
    edge_vertex.reserve(cells.size() * 2);

    for (const PseudoCell& cell : cells) {
        const auto& tris = tables.triangles(cell.mask);
        if (tris.empty()) continue;
        std::array<std::uint32_t, 12> ids{};
        std::array<bool, 12> have{};
        for (const auto& tri : tris) {
            for (int e : tri) {
                if (have[static_cast<std::size_t>(e)]) continue;
                const auto [ca, cb] = McTables::kEdgeCorners[static_cast<std::size_t>(e)];
                const auto oa = corner_offset(ca);
                const int vi = cell.coord.i + oa[0];
                const int vj = cell.coord.j + oa[1];
                const int vk = cell.coord.k + oa[2];
                const int axis = e < 4 ? 0 : (e < 8 ? 1 : 2);
                const std::uint64_t key = edge_key(vi, vj, vk, axis);
                const auto it = edge_vertex.find(key);
                if (it != edge_vertex.end()) {
                    ids[static_cast<std::size_t>(e)] = it->second;
                } else {
                    // position from the magnitudes only: identical bits no
                    // matter which side carries the negative sign
                    const double mlo = cell.magnitudes[static_cast<std::size_t>(ca)];
                    const double mhi = cell.magnitudes[static_cast<std::size_t>(cb)];
                    const double denom = mlo + mhi;
                    double t = denom > 0.0 ? mlo / denom : 0.5;
                    t = std::clamp(t, 1e-6, 1.0 - 1e-6);
                    const auto ob = corner_offset(cb);
                    const Vec3 plo = spec.vertex(vi, vj, vk);
                    const Vec3 phi = spec.vertex(cell.coord.i + ob[0], cell.coord.j + ob[1], cell.coord.k + ob[2]);
                    const Vec3 pos = plo + (phi - plo) * t;
                    const auto id = static_cast<std::uint32_t>(mesh.vertices.size());
                    mesh.vertices.push_back(pos);
                    edge_vertex.emplace(key, id);
                    ids[static_cast<std::size_t>(e)] = id;
                }
                have[static_cast<std::size_t>(e)] = true;
            }
            mesh.triangles.push_back({ids[static_cast<std::size_t>(tri[0])],
                                      ids[static_cast<std::size_t>(tri[1])],
                                      ids[static_cast<std::size_t>(tri[2])]});
        }
    }
    return mesh;
}

TriangleMesh mesh_oracle(const FieldSource& source, const GridSpec& spec, int threads) {
    spec.validate();
    if (!source.signed_capable()) throw UnsupportedKindError("oracle meshing needs a signed-capable source");

    // one signed evaluation per lattice vertex
    const int m = spec.verts_per_axis();
    std::vector<double> sd(spec.vertex_count());
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i)
            for (int j = 0; j < m; ++j) {
                std::size_t idx = spec.vertex_index(static_cast<int>(i), j, 0);
                for (int k = 0; k < m; ++k, ++idx)
                    sd[idx] = source.signed_distance(spec.vertex(static_cast<int>(i), j, k));
            }
    });

    const int n = spec.resolution;
    std::vector<PseudoCell> cells;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                PseudoCell cell;
                cell.coord = {i, j, k};
                std::uint8_t mask = 0;
                for (int c = 0; c < 8; ++c) {
                    const auto off = corner_offset(c);
                    const double v = sd[spec.vertex_index(i + off[0], j + off[1], k + off[2])];
                    if (v <= 0.0) mask |= static_cast<std::uint8_t>(1u << c);
                    cell.magnitudes[static_cast<std::size_t>(c)] = std::abs(v);
                }
                if (mask == 0x00 || mask == 0xFF) continue;
                cell.mask = mask;
                cells.push_back(cell);
            }
        }
    }
    return mesh_cells(spec, cells);
}

} // namespace udfmesh
