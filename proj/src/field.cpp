#include "udfmesh/field.hpp"

#include "udfmesh/bvh.hpp"
#include "udfmesh/errors.hpp"
#include "udfmesh/rng.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace udfmesh {

double FieldSource::signed_distance(const Vec3&) const {
    throw UnsupportedKindError(std::string("field kind '") + kind() + "' has no signed distance");
}

namespace {

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct Sphere final : FieldSource {
    double r;
    explicit Sphere(double r_) : r(r_) {
        if (r <= 0.0) throw Error("sphere radius must be positive");
    }
    double signed_distance(const Vec3& p) const override { return p.norm() - r; }
    FieldSample evaluate(const Vec3& p) const override {
        const double len = p.norm();
        const double sd = len - r;
        if (len == 0.0 || sd == 0.0) return {std::abs(sd), {}};
        return {std::abs(sd), p * (sign_of(sd) / len)};
    }
    bool signed_capable() const override { return true; }
    const char* kind() const override { return "sphere"; }
};

struct Box final : FieldSource {
    Vec3 he;
    explicit Box(const Vec3& he_) : he(he_) {
        if (he.x <= 0.0 || he.y <= 0.0 || he.z <= 0.0) throw Error("box half-extents must be positive");
    }
    bool signed_capable() const override { return true; }
    const char* kind() const override { return "box"; }

    double signed_distance(const Vec3& p) const override {
        const Vec3 q{std::abs(p.x) - he.x, std::abs(p.y) - he.y, std::abs(p.z) - he.z};
        const Vec3 qp = cwise_max(q, Vec3{});
        const double m = std::max(q.x, std::max(q.y, q.z));
        return qp.norm() + std::min(m, 0.0);
    }

    FieldSample evaluate(const Vec3& p) const override {
        const Vec3 q{std::abs(p.x) - he.x, std::abs(p.y) - he.y, std::abs(p.z) - he.z};
        const Vec3 qp = cwise_max(q, Vec3{});
        const double outside = qp.norm();
        const double m = std::max(q.x, std::max(q.y, q.z));
        const double sd = outside + std::min(m, 0.0);
        if (sd == 0.0) return {0.0, {}};
        Vec3 g;
        if (outside > 0.0) {
            g = {sign_of(p.x) * qp.x / outside, sign_of(p.y) * qp.y / outside, sign_of(p.z) * qp.z / outside};
        } else {
            // inside: gradient points at the unique nearest face, zero on ties
            const int axis = m == q.x ? 0 : (m == q.y ? 1 : 2);
            int hits = (q.x == m) + (q.y == m) + (q.z == m);
            const double pa = p[axis];
            if (hits > 1 || pa == 0.0) return {std::abs(sd), {}};
            g = {};
            (axis == 0 ? g.x : axis == 1 ? g.y : g.z) = sign_of(pa);
        }
        return {std::abs(sd), g * sign_of(sd)};
    }
};

struct Torus final : FieldSource {
    double R, r;
    Torus(double R_, double r_) : R(R_), r(r_) {
        if (R <= 0.0 || r <= 0.0 || r >= R) throw Error("torus needs 0 < minor_radius < major_radius");
    }
    bool signed_capable() const override { return true; }
    const char* kind() const override { return "torus"; }

    double signed_distance(const Vec3& p) const override {
        const double rho = std::hypot(p.x, p.y);
        return std::hypot(rho - R, p.z) - r;
    }

    FieldSample evaluate(const Vec3& p) const override {
        const double rho = std::hypot(p.x, p.y);
        const double len = std::hypot(rho - R, p.z);
        const double sd = len - r;
        if (rho == 0.0 || len == 0.0 || sd == 0.0) return {std::abs(sd), {}};
        const double t = (rho - R) / len;
        const Vec3 g{t * p.x / rho, t * p.y / rho, p.z / len};
        return {std::abs(sd), g * sign_of(sd)};
    }
};

struct PlaneSlab final : FieldSource {
    double hx, hy;
    PlaneSlab(double hx_, double hy_) : hx(hx_), hy(hy_) {
        if (hx <= 0.0 || hy <= 0.0) throw Error("plane-slab half-extents must be positive");
    }
    const char* kind() const override { return "plane-slab"; }
    FieldSample evaluate(const Vec3& p) const override {
        const Vec3 c{std::clamp(p.x, -hx, hx), std::clamp(p.y, -hy, hy), 0.0};
        const Vec3 d = p - c;
        const double len = d.norm();
        if (len == 0.0) return {0.0, {}};
        return {len, d / len};
    }
};

struct OpenDisk final : FieldSource {
    double r;
    explicit OpenDisk(double r_) : r(r_) {
        if (r <= 0.0) throw Error("open-disk radius must be positive");
    }
    const char* kind() const override { return "open-disk"; }
    FieldSample evaluate(const Vec3& p) const override {
        const double rho = std::hypot(p.x, p.y);
        Vec3 c{p.x, p.y, 0.0};
        if (rho > r) c = Vec3{p.x * r / rho, p.y * r / rho, 0.0};
        const Vec3 d = p - c;
        const double len = d.norm();
        if (len == 0.0) return {0.0, {}};
        return {len, d / len};
    }
};

struct Union final : FieldSource {
    std::vector<FieldPtr> children;
    bool all_signed;
    explicit Union(std::vector<FieldPtr> c) : children(std::move(c)) {
        if (children.empty()) throw Error("union needs at least one child");
        all_signed = true;
        for (const auto& ch : children) all_signed = all_signed && ch->signed_capable();
    }
    bool signed_capable() const override { return all_signed; }
    const char* kind() const override { return "union"; }

    double signed_distance(const Vec3& p) const override {
        if (!all_signed) return FieldSource::signed_distance(p);
        double best = children[0]->signed_distance(p);
        for (std::size_t i = 1; i < children.size(); ++i) best = std::min(best, children[i]->signed_distance(p));
        return best;
    }

    FieldSample evaluate(const Vec3& p) const override {
        // ties keep the first child, so evaluation order is part of the contract
        if (all_signed) {
            std::size_t w = 0;
            double best = children[0]->signed_distance(p);
            for (std::size_t i = 1; i < children.size(); ++i) {
                const double sd = children[i]->signed_distance(p);
                if (sd < best) {
                    best = sd;
                    w = i;
                }
            }
            return children[w]->evaluate(p);
        }
        FieldSample best = children[0]->evaluate(p);
        for (std::size_t i = 1; i < children.size(); ++i) {
            const FieldSample s = children[i]->evaluate(p);
            if (s.distance < best.distance) best = s;
        }
        return best;
    }
};

struct Intersection final : FieldSource {
    std::vector<FieldPtr> children;
    explicit Intersection(std::vector<FieldPtr> c) : children(std::move(c)) {
        if (children.empty()) throw Error("intersection needs at least one child");
        for (const auto& ch : children)
            if (!ch->signed_capable())
                throw UnsupportedKindError("intersection requires signed-capable children");
    }
    bool signed_capable() const override { return true; }
    const char* kind() const override { return "intersection"; }

    double signed_distance(const Vec3& p) const override {
        double best = children[0]->signed_distance(p);
        for (std::size_t i = 1; i < children.size(); ++i) best = std::max(best, children[i]->signed_distance(p));
        return best;
    }

    FieldSample evaluate(const Vec3& p) const override {
        std::size_t w = 0;
        double best = children[0]->signed_distance(p);
        for (std::size_t i = 1; i < children.size(); ++i) {
            const double sd = children[i]->signed_distance(p);
            if (sd > best) {
                best = sd;
                w = i;
            }
        }
        return children[w]->evaluate(p);
    }
};

struct Translate final : FieldSource {
    FieldPtr child;
    Vec3 off;
    Translate(FieldPtr c, const Vec3& o) : child(std::move(c)), off(o) {
        if (!child) throw Error("translate needs a child");
    }
    bool signed_capable() const override { return child->signed_capable(); }
    const char* kind() const override { return "translate"; }
    double signed_distance(const Vec3& p) const override { return child->signed_distance(p - off); }
    FieldSample evaluate(const Vec3& p) const override { return child->evaluate(p - off); }
};

struct Scale final : FieldSource {
    FieldPtr child;
    double s;
    Scale(FieldPtr c, double s_) : child(std::move(c)), s(s_) {
        if (!child) throw Error("scale needs a child");
        if (s <= 0.0) throw Error("scale factor must be positive");
    }
    bool signed_capable() const override { return child->signed_capable(); }
    const char* kind() const override { return "scale"; }
    double signed_distance(const Vec3& p) const override { return s * child->signed_distance(p / s); }
    FieldSample evaluate(const Vec3& p) const override {
        FieldSample smp = child->evaluate(p / s);
        smp.distance *= s;
        return smp;
    }
};

struct MeshUdf final : FieldSource {
    std::shared_ptr<const TriangleMesh> mesh;
    TriangleBvh bvh;
    bool parity_sign;
    MeshUdf(std::shared_ptr<const TriangleMesh> m, bool parity) : mesh(std::move(m)), parity_sign(parity) {
        if (!mesh || mesh->triangles.empty()) throw Error("mesh-udf needs a nonempty mesh");
        bvh = TriangleBvh(*mesh);
    }
    bool signed_capable() const override { return parity_sign; }
    const char* kind() const override { return "mesh-udf"; }

    FieldSample evaluate(const Vec3& p) const override {
        const auto hit = bvh.nearest(p);
        if (hit.distance < 1e-12) return {hit.distance, {}};
        return {hit.distance, (p - hit.closest) / hit.distance};
    }

    double signed_distance(const Vec3& p) const override {
        if (!parity_sign) return FieldSource::signed_distance(p);
        const auto hit = bvh.nearest(p);
        return inside_by_parity(p) ? -hit.distance : hit.distance;
    }

    // Crossing parity along a fixed skew direction. Approximate for rays
    // grazing triangle edges; adequate for the optional mesh-label path.
    bool inside_by_parity(const Vec3& p) const {
        const Vec3 dir{0.5377397264774, 0.78582790709918, 0.30527181101443};
        int crossings = 0;
        for (const auto& tri : mesh->triangles) {
            const Vec3& a = mesh->vertices[tri[0]];
            const Vec3 e1 = mesh->vertices[tri[1]] - a;
            const Vec3 e2 = mesh->vertices[tri[2]] - a;
            const Vec3 pv = cross(dir, e2);
            const double det = dot(e1, pv);
            if (std::abs(det) < 1e-14) continue;
            const double inv = 1.0 / det;
            const Vec3 tv = p - a;
            const double u = dot(tv, pv) * inv;
            if (u < 0.0 || u > 1.0) continue;
            const Vec3 qv = cross(tv, e1);
            const double v = dot(dir, qv) * inv;
            if (v < 0.0 || u + v > 1.0) continue;
            const double t = dot(e2, qv) * inv;
            if (t > 1e-12) ++crossings;
        }
        return (crossings & 1) != 0;
    }
};

struct Corrupted final : FieldSource {
    FieldPtr child;
    double clamp, sigma;
    std::uint64_t seed;
    Corrupted(FieldPtr c, double clamp_, double sigma_, std::uint64_t seed_)
        : child(std::move(c)), clamp(clamp_), sigma(sigma_), seed(seed_) {
        if (!child) throw Error("corrupted needs a child");
        if (clamp <= 0.0) throw Error("corruption clamp must be positive");
        if (sigma < 0.0) throw Error("corruption sigma must be nonnegative");
    }
    const char* kind() const override { return "corrupted"; }

    static std::int64_t quantize(double v) { return static_cast<std::int64_t>(std::llround(v * 1048576.0)); }

    FieldSample evaluate(const Vec3& p) const override {
        FieldSample s = child->evaluate(p);
        const auto qx = static_cast<std::uint64_t>(quantize(p.x));
        const auto qy = static_cast<std::uint64_t>(quantize(p.y));
        const auto qz = static_cast<std::uint64_t>(quantize(p.z));
        if (s.distance >= clamp) {
            s.distance = clamp; // saturated plateau of the emulated field
        } else if (sigma > 0.0) {
            const double n = keyed_normal(seed, qx, qy, qz, std::uint64_t{0}) * sigma;
            s.distance = std::max(s.distance * (1.0 + n), 0.0);
        }
        if (sigma > 0.0) {
            const double n = keyed_normal(seed, qx, qy, qz, std::uint64_t{1}) * sigma;
            s.gradient *= (1.0 + n);
        }
        return s;
    }
};

} // namespace

FieldPtr make_sphere(double radius) { return std::make_shared<Sphere>(radius); }
FieldPtr make_box(const Vec3& half_extents) { return std::make_shared<Box>(half_extents); }
FieldPtr make_torus(double major_radius, double minor_radius) {
    return std::make_shared<Torus>(major_radius, minor_radius);
}
FieldPtr make_plane_slab(double half_x, double half_y) { return std::make_shared<PlaneSlab>(half_x, half_y); }
FieldPtr make_open_disk(double radius) { return std::make_shared<OpenDisk>(radius); }
FieldPtr make_union(std::vector<FieldPtr> children) { return std::make_shared<Union>(std::move(children)); }
FieldPtr make_intersection(std::vector<FieldPtr> children) {
    return std::make_shared<Intersection>(std::move(children));
}
FieldPtr make_translate(FieldPtr child, const Vec3& offset) {
    return std::make_shared<Translate>(std::move(child), offset);
}
FieldPtr make_scale(FieldPtr child, double factor) { return std::make_shared<Scale>(std::move(child), factor); }
FieldPtr make_mesh_udf(std::shared_ptr<const TriangleMesh> mesh, bool ray_parity_sign) {
    return std::make_shared<MeshUdf>(std::move(mesh), ray_parity_sign);
}
FieldPtr make_corrupted(FieldPtr child, double clamp, double sigma, std::uint64_t seed) {
    return std::make_shared<Corrupted>(std::move(child), clamp, sigma, seed);
}

} // namespace udfmesh
