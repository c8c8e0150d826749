#include "udfmesh/grid.hpp"

#include "udfmesh/errors.hpp"
#include "udfmesh/threads.hpp"

namespace udfmesh {

void GridSpec::validate() const {
    if (resolution < 2) throw Error("grid resolution must be at least 2");
    if (!(hi.x > lo.x) || !(hi.y > lo.y) || !(hi.z > lo.z))
        throw Error("grid domain must have positive extent on every axis");
}

SampledGrid sample_grid(const FieldSource& source, const GridSpec& spec, int threads) {
    spec.validate();
    SampledGrid grid;
    grid.spec = spec;
    grid.values.resize(spec.vertex_count());
    grid.gradients.resize(spec.vertex_count());

    const int m = spec.verts_per_axis();
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            for (int j = 0; j < m; ++j) {
                std::size_t idx = spec.vertex_index(static_cast<int>(i), j, 0);
                for (int k = 0; k < m; ++k, ++idx) {
                    const FieldSample s = source.evaluate(spec.vertex(static_cast<int>(i), j, k));
                    grid.values[idx] = s.distance;
                    grid.gradients[idx] = s.gradient;
                }
            }
        }
    });
    return grid;
}

} // namespace udfmesh
