#include "udfmesh/mesher.hpp"

#include "udfmesh/bvh.hpp"
#include "udfmesh/metrics.hpp"
#include "udfmesh/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

using namespace udfmesh;

namespace {

GridSpec small_spec(int res) {
    GridSpec spec;
    spec.resolution = res;
    return spec;
}

PseudoCell cell_with(std::uint8_t mask, const std::array<double, 8>& mags, CellCoord coord = {0, 0, 0}) {
    PseudoCell c;
    c.coord = coord;
    c.mask = mask;
    c.magnitudes = mags;
    return c;
}

// undirected triangle set as sorted position triples (quantized for set semantics)
std::multiset<std::array<std::int64_t, 9>> geometry_key(const TriangleMesh& m) {
    std::multiset<std::array<std::int64_t, 9>> out;
    for (const auto& t : m.triangles) {
        std::array<std::array<std::int64_t, 3>, 3> pts;
        for (int v = 0; v < 3; ++v) {
            const Vec3& p = m.vertices[t[v]];
            pts[v] = {static_cast<std::int64_t>(llround(p.x * 1e12)),
                      static_cast<std::int64_t>(llround(p.y * 1e12)),
                      static_cast<std::int64_t>(llround(p.z * 1e12))};
        }
        std::sort(pts.begin(), pts.end());
        out.insert({pts[0][0], pts[0][1], pts[0][2], pts[1][0], pts[1][1], pts[1][2], pts[2][0], pts[2][1],
                    pts[2][2]});
    }
    return out;
}

// every undirected edge must be used by exactly two triangles
bool watertight(const TriangleMesh& m) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
    for (const auto& t : m.triangles)
        for (int e = 0; e < 3; ++e) {
            const std::uint32_t a = t[e], b = t[(e + 1) % 3];
            edges[{std::min(a, b), std::max(a, b)}] += 1;
        }
    for (const auto& [edge, count] : edges)
        if (count != 2) return false;
    return !edges.empty();
}

long euler_characteristic(const TriangleMesh& m) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (const auto& t : m.triangles)
        for (int e = 0; e < 3; ++e) {
            const std::uint32_t a = t[e], b = t[(e + 1) % 3];
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    return static_cast<long>(m.vertices.size()) - static_cast<long>(edges.size()) +
           static_cast<long>(m.triangles.size());
}

} // namespace

TEST_CASE("uniform masks produce no triangles") {
    const auto& tables = McTables::instance();
    CHECK(tables.triangles(0x00).empty());
    CHECK(tables.triangles(0xFF).empty());
    int nonempty = 0;
    for (int m = 1; m < 255; ++m)
        if (!tables.triangles(static_cast<std::uint8_t>(m)).empty()) ++nonempty;
    CHECK(nonempty == 254);
}

TEST_CASE("single negative corner: one triangle at the interpolated offsets") {
    // corner 0 negative with |v| = 0.1, all positive corners at 0.3: each
    // crossing vertex sits at t = 0.25 from the negative corner
    std::array<double, 8> mags;
    mags.fill(0.3);
    mags[0] = 0.1;
    const TriangleMesh m = mesh_cells(small_spec(2), {cell_with(0x01, mags)});
    REQUIRE(m.triangles.size() == 1);
    REQUIRE(m.vertices.size() == 3);
    for (const Vec3& v : m.vertices) {
        // cell (0,0,0) on [-1,1]^3 at N=2: corner 0 is (-1,-1,-1), edges run to 0
        const Vec3 rel = (v - Vec3{-1, -1, -1}) / 1.0;
        const double offset = std::max({rel.x, rel.y, rel.z});
        CHECK(offset == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("symmetric magnitudes put the vertex at the edge midpoint") {
    std::array<double, 8> mags;
    mags.fill(0.2);
    const TriangleMesh m = mesh_cells(small_spec(2), {cell_with(0x0F, mags)}); // bottom face negative
    REQUIRE(!m.vertices.empty());
    for (const Vec3& v : m.vertices) CHECK(v.z == doctest::Approx(-0.5).epsilon(1e-12)); // z edge midpoints
}

TEST_CASE("interpolated vertices stay strictly inside their edges") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto mask = static_cast<std::uint8_t>(1 + rng.next_below(254));
        std::array<double, 8> mags;
        for (double& v : mags) v = rng.next_unit() < 0.1 ? 0.0 : rng.next_range(1e-9, 0.2);
        const TriangleMesh m = mesh_cells(small_spec(2), {cell_with(mask, mags)});
        for (const Vec3& v : m.vertices) {
            // every coordinate is in [-1, 0] for cell (0,0,0); crossing
            // coordinates must be strictly interior
            CHECK(v.x > -1.0 - 1e-15);
            CHECK(v.x < 0.0 + 1e-15);
            const Vec3 rel = v - Vec3{-1, -1, -1};
            for (double c : {rel.x, rel.y, rel.z})
                if (c > 1e-15 && c < 1.0 - 1e-15) {
                    CHECK(c >= 1e-6 * (1.0 - 1e-9));
                    CHECK(c <= 1.0 - 1e-6 * (1.0 - 1e-9));
                }
        }
    }
}

TEST_CASE("flip invariance: mask and complement mesh to identical geometry") {
    Rng rng(7);
    for (int mask = 0; mask < 256; ++mask) {
        std::array<double, 8> mags;
        for (double& v : mags) v = rng.next_range(0.01, 0.3);
        const TriangleMesh a = mesh_cells(small_spec(2), {cell_with(static_cast<std::uint8_t>(mask), mags)});
        const TriangleMesh b =
            mesh_cells(small_spec(2), {cell_with(static_cast<std::uint8_t>(mask ^ 0xFF), mags)});
        CHECK(geometry_key(a) == geometry_key(b));
    }
}

TEST_CASE("oracle sphere: watertight, Euler characteristic 2, Hausdorff within one cell") {
    const auto sphere = make_sphere(0.5);
    const GridSpec spec = small_spec(32);
    const TriangleMesh mesh = mesh_oracle(*sphere, spec, 0);
    REQUIRE(!mesh.empty());
    CHECK(watertight(mesh));
    CHECK(euler_characteristic(mesh) == 2);

    const double h = spec.cell_size();
    // mesh -> sphere: sample faces and check radial deviation
    for (const Vec3& p : sample_surface(mesh, 20000, 3)) CHECK(std::abs(p.norm() - 0.5) < h);
    // sphere -> mesh
    const TriangleBvh bvh(mesh);
    Rng rng(9);
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double z = rng.next_range(-1, 1);
        const double phi = rng.next_range(0, 6.283185307179586);
        const double r = std::sqrt(std::max(0.0, 1 - z * z));
        const Vec3 p = Vec3{r * std::cos(phi), r * std::sin(phi), z} * 0.5;
        worst = std::max(worst, bvh.nearest(p).distance);
    }
    CHECK(worst < h);
}

TEST_CASE("global sign flip: same vertices, reversed orientation") {
    struct Negated final : FieldSource {
        FieldPtr inner = make_sphere(0.45);
        FieldSample evaluate(const Vec3& p) const override { return inner->evaluate(p); }
        bool signed_capable() const override { return true; }
        double signed_distance(const Vec3& p) const override { return -inner->signed_distance(p); }
        const char* kind() const override { return "negated"; }
    };
    const auto sphere = make_sphere(0.45);
    const auto flipped = std::make_shared<Negated>();
    const GridSpec spec = small_spec(16);
    const TriangleMesh a = mesh_oracle(*sphere, spec, 0);
    const TriangleMesh b = mesh_oracle(*flipped, spec, 0);
    REQUIRE(a.vertices.size() == b.vertices.size());
    CHECK(geometry_key(a) == geometry_key(b));
    // orientation is reversed: matched triangles carry opposite normals
    REQUIRE(a.triangles.size() == b.triangles.size());
    const auto keyed_normals = [](const TriangleMesh& m) {
        std::vector<std::pair<std::array<std::int64_t, 9>, Vec3>> out;
        for (const auto& t : m.triangles) {
            std::array<std::array<std::int64_t, 3>, 3> pts;
            for (int v = 0; v < 3; ++v) {
                const Vec3& p = m.vertices[t[v]];
                pts[v] = {static_cast<std::int64_t>(llround(p.x * 1e12)),
                          static_cast<std::int64_t>(llround(p.y * 1e12)),
                          static_cast<std::int64_t>(llround(p.z * 1e12))};
            }
            const Vec3 n = cross(m.vertices[t[1]] - m.vertices[t[0]], m.vertices[t[2]] - m.vertices[t[0]]);
            std::sort(pts.begin(), pts.end());
            out.push_back({{pts[0][0], pts[0][1], pts[0][2], pts[1][0], pts[1][1], pts[1][2], pts[2][0],
                            pts[2][1], pts[2][2]},
                           n});
        }
        std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        return out;
    };
    const auto na = keyed_normals(a);
    const auto nb = keyed_normals(b);
    int reversed = 0;
    for (std::size_t t = 0; t < na.size(); ++t) {
        REQUIRE(na[t].first == nb[t].first);
        if (dot(na[t].second, nb[t].second) < 0.0) ++reversed;
    }
    CHECK(reversed == static_cast<int>(a.triangles.size()));
}

TEST_CASE("triangle count scales like surface area with resolution") {
    const auto sphere = make_sphere(0.5);
    const TriangleMesh m32 = mesh_oracle(*sphere, small_spec(32), 0);
    const TriangleMesh m64 = mesh_oracle(*sphere, small_spec(64), 0);
    const double factor = static_cast<double>(m64.triangles.size()) / static_cast<double>(m32.triangles.size());
    CHECK(factor >= 3.0);
    CHECK(factor <= 5.0);
}

TEST_CASE("identical inputs produce byte-identical OBJ output") {
    const auto torus = make_torus(0.4, 0.15);
    const GridSpec spec = small_spec(24);
    std::ostringstream a, b;
    write_obj(mesh_oracle(*torus, spec, 0), a);
    write_obj(mesh_oracle(*torus, spec, 2), b);
    CHECK(a.str() == b.str());
}
