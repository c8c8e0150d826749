#pragma once

#include "udfmesh/field.hpp"
#include "udfmesh/vec3.hpp"

#include <cstddef>
#include <vector>

namespace udfmesh {

// Regular lattice over an axis-aligned box: N cells per axis, N+1 vertices.
// vertex(i,j,k) is the fixed expression lo + extent * (i / N) per axis, so
// lattice positions are bit-reproducible given (domain, N).
struct GridSpec {
    int resolution = 128;
    Vec3 lo{-1.0, -1.0, -1.0};
    Vec3 hi{1.0, 1.0, 1.0};

    void validate() const;
    int verts_per_axis() const { return resolution + 1; }
    std::size_t vertex_count() const {
        const std::size_t m = static_cast<std::size_t>(verts_per_axis());
        return m * m * m;
    }
    // Row-major, k fastest.
    std::size_t vertex_index(int i, int j, int k) const {
        const std::size_t m = static_cast<std::size_t>(verts_per_axis());
        return (static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j)) * m + static_cast<std::size_t>(k);
    }
    Vec3 vertex(int i, int j, int k) const {
        const double n = static_cast<double>(resolution);
        return {lo.x + (hi.x - lo.x) * (static_cast<double>(i) / n),
                lo.y + (hi.y - lo.y) * (static_cast<double>(j) / n),
                lo.z + (hi.z - lo.z) * (static_cast<double>(k) / n)};
    }
    // Scalar cell size used for feature normalization; the pipeline assumes a
    // cubic domain (the default [-1,1]^3).
    double cell_size() const { return (hi.x - lo.x) / static_cast<double>(resolution); }
};

// UDF values and gradients at every lattice vertex, in vertex_index order.
struct SampledGrid {
    GridSpec spec;
    std::vector<double> values;
    std::vector<Vec3> gradients;

    double value(int i, int j, int k) const { return values[spec.vertex_index(i, j, k)]; }
    const Vec3& gradient(int i, int j, int k) const { return gradients[spec.vertex_index(i, j, k)]; }
};

// Evaluates the source at every vertex. Parallel over vertices; the output
// layout (and content) is independent of the thread count.
SampledGrid sample_grid(const FieldSource& source, const GridSpec& spec, int threads = 0);

} // namespace udfmesh
