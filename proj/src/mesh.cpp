#include "udfmesh/mesh.hpp"

#include "udfmesh/errors.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace udfmesh {

double TriangleMesh::triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
    return 0.5 * cross(e1, e2).norm();
}

double TriangleMesh::total_area() const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) s += triangle_area(t);
    return s;
}

namespace {

[[noreturn]] void parse_fail(const std::string& name, std::size_t line, const std::string& what) {
    throw FormatError(name + ":" + std::to_string(line) + ": " + what);
}

} // namespace

TriangleMesh read_obj(std::istream& in, const std::string& name) {
    TriangleMesh mesh;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z)) parse_fail(name, lineno, "malformed vertex record");
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            long idx[3];
            for (int c = 0; c < 3; ++c) {
                std::string tok;
                if (!(ls >> tok)) parse_fail(name, lineno, "face needs 3 vertex indices");
                // accept v, v/t, v/t/n, v//n forms; only the vertex index is used
                std::size_t pos = 0;
                long v = 0;
                try {
                    v = std::stol(tok, &pos);
                } catch (const std::exception&) {
                    parse_fail(name, lineno, "invalid face index '" + tok + "'");
                }
                if (pos != tok.size() && tok[pos] != '/')
                    parse_fail(name, lineno, "invalid face index '" + tok + "'");
                if (v < 1) parse_fail(name, lineno, "face index " + std::to_string(v) + " out of range (1-based)");
                if (static_cast<std::size_t>(v) > mesh.vertices.size())
                    parse_fail(name, lineno, "face index " + std::to_string(v) + " exceeds vertex count");
                idx[c] = v - 1;
            }
            std::string extra;
            if (ls >> extra) parse_fail(name, lineno, "only triangles are supported");
            mesh.triangles.push_back({static_cast<std::uint32_t>(idx[0]),
                                      static_cast<std::uint32_t>(idx[1]),
                                      static_cast<std::uint32_t>(idx[2])});
        }
        // other record kinds are ignored
    }
    return mesh;
}

TriangleMesh read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_obj(in, path);
}

void write_obj(const TriangleMesh& mesh, std::ostream& out) {
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& t : mesh.triangles) {
        std::snprintf(buf, sizeof buf, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
        out << buf;
    }
}

void write_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_obj(mesh, out);
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace udfmesh
