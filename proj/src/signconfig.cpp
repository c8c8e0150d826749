#include "udfmesh/signconfig.hpp"

namespace udfmesh {

CornerMask signed_corner_mask(const FieldSource& source, const GridSpec& spec, int ci, int cj, int ck) {
    if (ci < 0 || cj < 0 || ck < 0 || ci >= spec.resolution || cj >= spec.resolution || ck >= spec.resolution)
        throw Error("cell coordinates out of range");
    CornerMask mask = 0;
    for (int c = 0; c < 8; ++c) {
        const auto off = corner_offset(c);
        const double sd = source.signed_distance(spec.vertex(ci + off[0], cj + off[1], ck + off[2]));
        if (sd <= 0.0) mask |= static_cast<CornerMask>(1u << c);
    }
    return mask;
}

std::uint8_t label_from_signed(const FieldSource& source, const GridSpec& spec, int ci, int cj, int ck) {
    return canonicalize(signed_corner_mask(source, spec, ci, cj, ck));
}

} // namespace udfmesh
