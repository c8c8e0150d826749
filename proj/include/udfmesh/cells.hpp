#pragma once

#include "udfmesh/grid.hpp"
#include "udfmesh/matrix.hpp"

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace udfmesh {

struct CellCoord {
    int i = 0, j = 0, k = 0;
    bool operator==(const CellCoord&) const = default;
};

inline std::uint64_t pack_cell(int i, int j, int k) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 42) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(j) & 0x1FFFFF) << 21) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k) & 0x1FFFFF));
}

// Face-neighbor slot order fed to the classifier: self first, then the six
// face neighbors. Fixed once and shared by the trainer and the refiner.
constexpr int kNeighborSlots = 7;
constexpr std::array<std::array<int, 3>, kNeighborSlots> kNeighborOffsets = {{
    {0, 0, 0}, {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1},
}};

// Per-cell rows of the 7 neighbor slots; -1 marks an absent neighbor
// (inactive or outside the grid), whose belief contribution is zero.
std::vector<std::array<std::int32_t, kNeighborSlots>> build_neighbor_table(
    const std::vector<CellCoord>& cells);

constexpr int kLocalFeatures = 32; // 8 normalized corner values + 8 corner gradients

// Classifier input width for a given category count: local features plus the
// belief vectors of the 7 neighbor slots.
constexpr std::size_t input_width(std::size_t categories) {
    return kLocalFeatures + kNeighborSlots * categories;
}

// Fills X (rows x input_width) from per-cell local features and the previous
// iteration's belief matrix (Jacobi update: beliefs are read, never written).
// Rows of X follow `rows`; an absent neighbor contributes zeros.
void assemble_inputs(const Matrix& features, const Matrix& beliefs,
                     const std::vector<std::array<std::int32_t, kNeighborSlots>>& neighbors,
                     const std::vector<std::uint32_t>& rows, Matrix& X, int threads = 0);

// Active-cell rule shared by training and inference: a cell participates iff
// the minimum of its 8 corner values lies strictly below the clamp threshold
// ("equal or above" is filtered out). Cells are returned sorted by (i, j, k).
std::vector<CellCoord> select_active(const SampledGrid& grid, double clamp);

// Local feature block of one cell: 8 corner values divided by the cell size,
// then the 8 corner gradients (x, y, z per corner).
void cell_features(const SampledGrid& grid, const CellCoord& cell, double* out32);

} // namespace udfmesh
