#pragma once

#include "udfmesh/errors.hpp"
#include "udfmesh/field.hpp"
#include "udfmesh/grid.hpp"

#include <array>
#include <cstdint>

namespace udfmesh {

// A cell's 8-corner sign pattern. Bit i is set when corner i carries a
// negative (inside) pseudo-sign; corner i sits at the cell-local offset
// ((i>>0)&1, (i>>1)&1, (i>>2)&1). The classifier predicts patterns up to a
// global flip, which quotients the 256 masks into 128 categories.
using CornerMask = std::uint8_t;

constexpr int kNumCategories = 128;

constexpr std::array<int, 3> corner_offset(int corner) {
    return {(corner >> 0) & 1, (corner >> 1) & 1, (corner >> 2) & 1};
}

// Canonical representative of the flip pair {m, ~m} is the numerically
// smaller mask, i.e. the one with corner 7 positive. Categories are ranked by
// their representative, which makes the id equal to the representative mask.
constexpr std::uint8_t canonicalize(CornerMask mask) {
    const CornerMask flipped = static_cast<CornerMask>(mask ^ 0xFF);
    return mask < flipped ? mask : flipped;
}

inline CornerMask representative(int category) {
    if (category < 0 || category >= kNumCategories)
        throw Error("category id " + std::to_string(category) + " out of range [0,128)");
    return static_cast<CornerMask>(category);
}

// Raw corner mask of one cell from signed evaluation. A corner with signed
// value exactly 0 counts as negative. Cell coordinates in [0, N).
CornerMask signed_corner_mask(const FieldSource& source, const GridSpec& spec, int ci, int cj, int ck);

// True sign configuration of one grid cell, canonicalized.
std::uint8_t label_from_signed(const FieldSource& source, const GridSpec& spec, int ci, int cj, int ck);

} // namespace udfmesh
