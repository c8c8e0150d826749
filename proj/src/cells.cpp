#include "udfmesh/cells.hpp"

#include "udfmesh/signconfig.hpp"
#include "udfmesh/threads.hpp"

#include <algorithm>

namespace udfmesh {

std::vector<std::array<std::int32_t, kNeighborSlots>> build_neighbor_table(
    const std::vector<CellCoord>& cells) {
    std::unordered_map<std::uint64_t, std::uint32_t> index;
    index.reserve(cells.size() * 2);
    for (std::uint32_t r = 0; r < cells.size(); ++r)
        index.emplace(pack_cell(cells[r].i, cells[r].j, cells[r].k), r);

    std::vector<std::array<std::int32_t, kNeighborSlots>> table(cells.size());
    for (std::uint32_t r = 0; r < cells.size(); ++r) {
        for (int s = 0; s < kNeighborSlots; ++s) {
            const auto& off = kNeighborOffsets[s];
            const auto it = index.find(pack_cell(cells[r].i + off[0], cells[r].j + off[1], cells[r].k + off[2]));
            table[r][s] = (it == index.end()) ? -1 : static_cast<std::int32_t>(it->second);
        }
    }
    return table;
}

void assemble_inputs(const Matrix& features, const Matrix& beliefs,
                     const std::vector<std::array<std::int32_t, kNeighborSlots>>& neighbors,
                     const std::vector<std::uint32_t>& rows, Matrix& X, int threads) {
    const std::size_t C = beliefs.cols;
    const std::size_t width = input_width(C);
    if (X.rows != rows.size() || X.cols != width) X = Matrix(rows.size(), width);
    parallel_for(rows.size(), threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            const std::uint32_t cell = rows[r];
            double* x = X.row(r);
            const double* f = features.row(cell);
            for (int j = 0; j < kLocalFeatures; ++j) x[j] = f[j];
            double* slots = x + kLocalFeatures;
            for (int s = 0; s < kNeighborSlots; ++s, slots += C) {
                const std::int32_t nb = neighbors[cell][s];
                if (nb < 0) {
                    for (std::size_t c = 0; c < C; ++c) slots[c] = 0.0;
                } else {
                    const double* b = beliefs.row(static_cast<std::size_t>(nb));
                    for (std::size_t c = 0; c < C; ++c) slots[c] = b[c];
                }
            }
        }
    });
}

std::vector<CellCoord> select_active(const SampledGrid& grid, double clamp) {
    const int n = grid.spec.resolution;
    const int m = grid.spec.verts_per_axis();
    std::vector<CellCoord> active;
    const double* v = grid.values.data();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const std::size_t base = grid.spec.vertex_index(i, j, 0);
            for (int k = 0; k < n; ++k) {
                // min over the 8 corners; strict < keeps the saturated plateau out
                const std::size_t c000 = base + static_cast<std::size_t>(k);
                const std::size_t c010 = c000 + static_cast<std::size_t>(m);
                const std::size_t c100 = c000 + static_cast<std::size_t>(m) * m;
                const std::size_t c110 = c100 + static_cast<std::size_t>(m);
                double mn = v[c000];
                mn = std::min(mn, v[c000 + 1]);
                mn = std::min(mn, v[c010]);
                mn = std::min(mn, v[c010 + 1]);
                mn = std::min(mn, v[c100]);
                mn = std::min(mn, v[c100 + 1]);
                mn = std::min(mn, v[c110]);
                mn = std::min(mn, v[c110 + 1]);
                if (mn < clamp) active.push_back({i, j, k});
            }
        }
    }
    return active;
}

void cell_features(const SampledGrid& grid, const CellCoord& cell, double* out32) {
    const double inv_h = 1.0 / grid.spec.cell_size();
    for (int c = 0; c < 8; ++c) {
        const auto off = corner_offset(c);
        const std::size_t idx = grid.spec.vertex_index(cell.i + off[0], cell.j + off[1], cell.k + off[2]);
        out32[c] = grid.values[idx] * inv_h;
        const Vec3& g = grid.gradients[idx];
        out32[8 + 3 * c + 0] = g.x;
        out32[8 + 3 * c + 1] = g.y;
        out32[8 + 3 * c + 2] = g.z;
    }
}

} // namespace udfmesh
