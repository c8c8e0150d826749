#include "udfmesh/bvh.hpp"
#include "udfmesh/errors.hpp"
#include "udfmesh/field.hpp"
#include "udfmesh/mesh.hpp"
#include "udfmesh/rng.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace udfmesh;

namespace {

TriangleMesh random_soup(std::size_t triangles, std::uint64_t seed) {
    TriangleMesh m;
    Rng rng(seed);
    for (std::size_t t = 0; t < triangles; ++t) {
        const Vec3 a{rng.next_range(-1, 1), rng.next_range(-1, 1), rng.next_range(-1, 1)};
        const Vec3 b = a + Vec3{rng.next_range(-0.3, 0.3), rng.next_range(-0.3, 0.3), rng.next_range(-0.3, 0.3)};
        const Vec3 c = a + Vec3{rng.next_range(-0.3, 0.3), rng.next_range(-0.3, 0.3), rng.next_range(-0.3, 0.3)};
        const auto base = static_cast<std::uint32_t>(m.vertices.size());
        m.vertices.push_back(a);
        m.vertices.push_back(b);
        m.vertices.push_back(c);
        m.triangles.push_back({base, base + 1, base + 2});
    }
    return m;
}

double brute_distance(const TriangleMesh& m, const Vec3& p) {
    double best = 1e300;
    for (const auto& tri : m.triangles) {
        const Vec3 q = closest_point_on_triangle(p, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
        best = std::min(best, (p - q).norm());
    }
    return best;
}

std::uint64_t connectivity_hash(const TriangleMesh& m) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& t : m.triangles)
        for (const std::uint32_t v : t) {
            h ^= v;
            h *= 1099511628211ull;
        }
    return h;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("point-to-triangle distance: interior projection and vertex region") {
    TriangleMesh tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tri.triangles = {{0, 1, 2}};
    const auto field = make_mesh_udf(std::make_shared<TriangleMesh>(tri));

    const FieldSample interior = field->evaluate({0.25, 0.25, 0.5});
    CHECK(interior.distance == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(interior.gradient.x == doctest::Approx(0.0));
    CHECK(interior.gradient.y == doctest::Approx(0.0));
    CHECK(interior.gradient.z == doctest::Approx(1.0));

    const FieldSample vertex = field->evaluate({2, 0, 0});
    CHECK(vertex.distance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vertex.gradient.x == doctest::Approx(1.0));
}

TEST_CASE("BVH nearest equals the exhaustive minimum") {
    const TriangleMesh soup = random_soup(100, 42);
    const TriangleBvh bvh(soup);
    Rng rng(7);
    for (int q = 0; q < 1000; ++q) {
        const Vec3 p{rng.next_range(-1.5, 1.5), rng.next_range(-1.5, 1.5), rng.next_range(-1.5, 1.5)};
        const double expect = brute_distance(soup, p);
        CHECK(bvh.nearest(p).distance == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("empty mesh is rejected") {
    TriangleMesh empty;
    CHECK_THROWS_AS(TriangleBvh{empty}, Error);
    CHECK_THROWS_AS(make_mesh_udf(std::make_shared<TriangleMesh>(empty)), Error);
}

TEST_CASE("OBJ round-trip preserves coordinates and connectivity") {
    TriangleMesh tri;
    tri.vertices = {{0.125, -0.25, 1.0 / 3.0}, {1, 0, 0}, {0, 1, 0}};
    tri.triangles = {{0, 1, 2}};
    const std::string path = temp_path("udfmesh_roundtrip.obj");
    write_obj(tri, path);
    const TriangleMesh back = read_obj(path);
    REQUIRE(back.vertices.size() == 3);
    REQUIRE(back.triangles.size() == 1);
    CHECK(back.triangles[0] == tri.triangles[0]);
    for (std::size_t v = 0; v < 3; ++v) {
        CHECK(back.vertices[v].x == doctest::Approx(tri.vertices[v].x).epsilon(1e-6));
        CHECK(back.vertices[v].y == doctest::Approx(tri.vertices[v].y).epsilon(1e-6));
        CHECK(back.vertices[v].z == doctest::Approx(tri.vertices[v].z).epsilon(1e-6));
    }
    std::filesystem::remove(path);
}

TEST_CASE("OBJ writer output is byte-identical across runs") {
    const TriangleMesh soup = random_soup(50, 3);
    std::ostringstream a, b;
    write_obj(soup, a);
    write_obj(soup, b);
    CHECK(a.str() == b.str());
}

TEST_CASE("large OBJ round-trip keeps the connectivity hash") {
    const TriangleMesh soup = random_soup(10000, 11);
    const std::string path = temp_path("udfmesh_large.obj");
    write_obj(soup, path);
    const TriangleMesh back = read_obj(path);
    CHECK(connectivity_hash(back) == connectivity_hash(soup));
    std::filesystem::remove(path);
}

TEST_CASE("OBJ parse errors carry line numbers") {
    {
        std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n");
        CHECK_THROWS_WITH_AS(read_obj(in, "bad.obj"), doctest::Contains("bad.obj:4"), FormatError);
    }
    {
        std::istringstream in("v 0 0 0\nf 1 2 9\n");
        CHECK_THROWS_AS(read_obj(in, "bad.obj"), FormatError);
    }
    {
        std::istringstream in("v 0 nope 0\n");
        CHECK_THROWS_AS(read_obj(in, "bad.obj"), FormatError);
    }
    {
        // unknown records are ignored
        std::istringstream in("# comment\nvn 0 0 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        const TriangleMesh m = read_obj(in, "ok.obj");
        CHECK(m.triangles.size() == 1);
    }
}
