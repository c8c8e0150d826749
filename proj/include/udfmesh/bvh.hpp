#pragma once

#include "udfmesh/mesh.hpp"
#include "udfmesh/vec3.hpp"

#include <cstdint>
#include <vector>

namespace udfmesh {

// Closest point on triangle (a, b, c) to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Static AABB tree over the triangles of a mesh for nearest-point queries.
// The mesh must outlive the tree.
class TriangleBvh {
public:
    struct Hit {
        double distance = 0.0;
        Vec3 closest;
        std::uint32_t triangle = 0;
    };

    TriangleBvh() = default;
    explicit TriangleBvh(const TriangleMesh& mesh);

    bool empty() const { return nodes_.empty(); }
    Hit nearest(const Vec3& p) const;

private:
    struct Node {
        Vec3 lo, hi;
        // leaf: begin/count into tri_order_; inner: left child is index+1,
        // right child is `right`.
        std::uint32_t right = 0;
        std::uint32_t begin = 0;
        std::uint32_t count = 0; // 0 for inner nodes
    };

    std::uint32_t build(std::vector<std::uint32_t>& tris, std::uint32_t begin, std::uint32_t end,
                        const std::vector<Vec3>& centroids);

    const TriangleMesh* mesh_ = nullptr;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> tri_order_;
};

} // namespace udfmesh
