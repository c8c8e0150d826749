#pragma once

#include "udfmesh/vec3.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace udfmesh {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    bool empty() const { return triangles.empty(); }
    double triangle_area(std::size_t t) const;
    double total_area() const;
};

// Wavefront OBJ, ASCII subset: `v x y z` and `f i j k` records with 1-based
// indices. The reader ignores other record kinds (vn, vt, comments, ...) and
// reports malformed v/f records with their line number. The writer emits
// vertices then faces with %.9g coordinates, so identical meshes serialize to
// identical bytes.
TriangleMesh read_obj(const std::string& path);
TriangleMesh read_obj(std::istream& in, const std::string& name);
void write_obj(const TriangleMesh& mesh, const std::string& path);
void write_obj(const TriangleMesh& mesh, std::ostream& out);

} // namespace udfmesh
