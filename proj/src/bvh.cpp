#include "udfmesh/bvh.hpp"

#include "udfmesh/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace udfmesh {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson-style Voronoi region walk.
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap);
    const double d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp);
    const double d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return a + ab * v;
    }

    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp);
    const double d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return a + ac * w;
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    return a + ab * v + ac * w;
}

namespace {

double box_sq_distance(const Vec3& p, const Vec3& lo, const Vec3& hi) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double v = p[i];
        const double a = (i == 0 ? lo.x : (i == 1 ? lo.y : lo.z));
        const double b = (i == 0 ? hi.x : (i == 1 ? hi.y : hi.z));
        double d = 0.0;
        if (v < a) d = a - v;
        else if (v > b) d = v - b;
        s += d * d;
    }
    return s;
}

constexpr std::uint32_t kLeafSize = 4;

} // namespace

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) : mesh_(&mesh) {
    if (mesh.triangles.empty()) throw Error("cannot build a BVH over an empty mesh");
    const std::uint32_t n = static_cast<std::uint32_t>(mesh.triangles.size());
    std::vector<Vec3> centroids(n);
    for (std::uint32_t t = 0; t < n; ++t) {
        const auto& tri = mesh.triangles[t];
        centroids[t] = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    }
    tri_order_.resize(n);
    for (std::uint32_t t = 0; t < n; ++t) tri_order_[t] = t;
    nodes_.reserve(2 * static_cast<std::size_t>(n));
    build(tri_order_, 0, n, centroids);
}

std::uint32_t TriangleBvh::build(std::vector<std::uint32_t>& tris, std::uint32_t begin, std::uint32_t end,
                                 const std::vector<Vec3>& centroids) {
    const std::uint32_t node_index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();

    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi = -lo;
    for (std::uint32_t i = begin; i < end; ++i) {
        const auto& tri = mesh_->triangles[tris[i]];
        for (int c = 0; c < 3; ++c) {
            lo = cwise_min(lo, mesh_->vertices[tri[c]]);
            hi = cwise_max(hi, mesh_->vertices[tri[c]]);
        }
    }
    nodes_[node_index].lo = lo;
    nodes_[node_index].hi = hi;

    if (end - begin <= kLeafSize) {
        nodes_[node_index].begin = begin;
        nodes_[node_index].count = end - begin;
        return node_index;
    }

    const Vec3 ext = hi - lo;
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(tris.begin() + begin, tris.begin() + mid, tris.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = centroids[a][axis], cb = centroids[b][axis];
                         if (ca != cb) return ca < cb;
                         return a < b; // stable tie-break keeps builds deterministic
                     });

    build(tris, begin, mid, centroids);
    const std::uint32_t right = build(tris, mid, end, centroids);
    nodes_[node_index].right = right;
    return node_index;
}

TriangleBvh::Hit TriangleBvh::nearest(const Vec3& p) const {
    Hit best;
    best.distance = std::numeric_limits<double>::infinity();
    double best_sq = std::numeric_limits<double>::infinity();

    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (box_sq_distance(p, node.lo, node.hi) >= best_sq) continue;
        if (node.count > 0) {
            for (std::uint32_t i = node.begin; i < node.begin + node.count; ++i) {
                const std::uint32_t t = tri_order_[i];
                const auto& tri = mesh_->triangles[t];
                const Vec3 q = closest_point_on_triangle(p, mesh_->vertices[tri[0]],
                                                         mesh_->vertices[tri[1]], mesh_->vertices[tri[2]]);
                const double d2 = (p - q).squared_norm();
                if (d2 < best_sq) {
                    best_sq = d2;
                    best.closest = q;
                    best.triangle = t;
                }
            }
        } else {
            // visit the nearer child first
            const std::uint32_t r = node.right;
            const std::uint32_t left = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
            const double dl = box_sq_distance(p, nodes_[left].lo, nodes_[left].hi);
            const double dr = box_sq_distance(p, nodes_[r].lo, nodes_[r].hi);
            if (dl <= dr) {
                stack[top++] = r;
                stack[top++] = left;
            } else {
                stack[top++] = left;
                stack[top++] = r;
            }
        }
    }
    best.distance = std::sqrt(best_sq);
    return best;
}

} // namespace udfmesh
