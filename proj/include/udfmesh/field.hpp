#pragma once

#include "udfmesh/mesh.hpp"
#include "udfmesh/vec3.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace udfmesh {

struct FieldSample {
    double distance = 0.0; // unsigned, >= 0
    Vec3 gradient;         // spatial derivative of the unsigned distance
};

// A queryable unsigned distance source. Evaluation is pure: safe to call
// concurrently from any number of threads.
//
// Gradients are analytic where defined and the zero vector at singular
// points (surface, centers, medial-axis points with an ambiguous nearest
// point). Signed evaluation is available for watertight kinds: negative
// inside, positive outside, |signed| == unsigned everywhere. CSG combinations
// use min/max of child signed distances: the sign is exact, the magnitude is
// the usual lower-bound approximation near seams.
class FieldSource {
public:
    virtual ~FieldSource() = default;

    virtual FieldSample evaluate(const Vec3& p) const = 0;
    virtual bool signed_capable() const { return false; }
    // Throws UnsupportedKindError for open-surface kinds.
    virtual double signed_distance(const Vec3& p) const;
    virtual const char* kind() const = 0;
};

using FieldPtr = std::shared_ptr<const FieldSource>;

FieldPtr make_sphere(double radius);
FieldPtr make_box(const Vec3& half_extents);
// Ring around the z axis: distance major_radius from the axis, tube radius
// minor_radius.
FieldPtr make_torus(double major_radius, double minor_radius);
// Open rectangle patch of the z = 0 plane, |x| <= half_x, |y| <= half_y.
FieldPtr make_plane_slab(double half_x, double half_y);
// Open disk in the z = 0 plane.
FieldPtr make_open_disk(double radius);
FieldPtr make_union(std::vector<FieldPtr> children);
FieldPtr make_intersection(std::vector<FieldPtr> children); // children must be signed-capable
FieldPtr make_translate(FieldPtr child, const Vec3& offset);
FieldPtr make_scale(FieldPtr child, double factor); // factor > 0, uniform
// Exact point-to-mesh distance backed by a BVH. With ray_parity_sign the
// source also answers signed queries via ray-crossing parity (approximate
// near edges; off by default).
FieldPtr make_mesh_udf(std::shared_ptr<const TriangleMesh> mesh, bool ray_parity_sign = false);

// Emulates a noisy neural UDF on top of a clean source. Values at or above
// `clamp` saturate to exactly `clamp` (the far-field plateau of a clamped
// field). Below the plateau the value is scaled by (1 + n) and floored at 0;
// the gradient is scaled by an independent (1 + n'). n, n' ~ Normal(0, sigma)
// are drawn from a hash of (seed, point quantized to 2^-20), so re-sampling
// any grid is reproducible and coincident vertices of different grids see the
// same noise.
FieldPtr make_corrupted(FieldPtr child, double clamp, double sigma, std::uint64_t seed);

} // namespace udfmesh
