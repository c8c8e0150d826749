#pragma once

#include "udfmesh/field.hpp"
#include "udfmesh/grid.hpp"
#include "udfmesh/mesh.hpp"
#include "udfmesh/refiner.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace udfmesh {

// Per-cell Marching Cubes driven by the 8-bit corner mask (signconfig corner
// convention). Edges are numbered x edges first, then y, then z:
//   0:(0,1) 1:(2,3) 2:(4,5) 3:(6,7)   4:(0,2) 5:(1,3) 6:(4,6) 7:(5,7)
//   8:(0,4) 9:(1,5) 10:(2,6) 11:(3,7)
// The triangle table is the classic 15-case one with complementary masks
// derived by winding reversal, so mask m and m ^ 0xFF triangulate to the same
// undirected geometry by construction.
class McTables {
public:
    static const McTables& instance();

    static constexpr std::array<std::array<int, 2>, 12> kEdgeCorners = {{
        {0, 1}, {2, 3}, {4, 5}, {6, 7},
        {0, 2}, {1, 3}, {4, 6}, {5, 7},
        {0, 4}, {1, 5}, {2, 6}, {3, 7},
    }};

    const std::vector<std::array<int, 3>>& triangles(std::uint8_t mask) const { return tri_[mask]; }

private:
    std::vector<std::array<int, 3>> tri_[256];
};

// Triangulates the pseudo-signed cells. Crossing vertices are placed on cell
// edges at t = |v-| / (|v-| + |v+|) from the negative corner (clamped to
// [1e-6, 1-1e-6]; t = 0.5 when both magnitudes vanish) and are shared across
// cells by exact lattice-edge key. The crossing position depends only on the
// corner magnitudes, so cells that agree on an edge up to a global flip merge
// exactly; a cell that sees no crossing where its neighbor does leaves an
// open boundary (crack) rather than inventing a repair.
TriangleMesh mesh_cells(const GridSpec& spec, const std::vector<PseudoCell>& cells);

// Ground-truth meshing path: marches every sign-crossing cell of the exact
// signed field (corner magnitudes are the unsigned distances).
TriangleMesh mesh_oracle(const FieldSource& source, const GridSpec& spec, int threads = 0);

} // namespace udfmesh
