#include "udfmesh/corpus.hpp"

#include "udfmesh/errors.hpp"
#include "udfmesh/mesh.hpp"
#include "udfmesh/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace udfmesh {

namespace {

using nlohmann::json;

Vec3 vec_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw FormatError(std::string(what) + " must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

double num(const json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    return j.at(key).get<double>();
}

FieldPtr with_center(FieldPtr src, const json& j) {
    if (!j.contains("center")) return src;
    const Vec3 c = vec_from(j.at("center"), "center");
    if (c == Vec3{}) return src;
    return make_translate(std::move(src), c);
}

} // namespace

FieldPtr field_from_json(const json& j, const std::string& base_dir) {
    if (!j.is_object() || !j.contains("kind")) throw FormatError("field source needs a 'kind'");
    const std::string kind = j.at("kind").get<std::string>();

    if (kind == "sphere") return with_center(make_sphere(num(j, "radius")), j);
    if (kind == "box") return with_center(make_box(vec_from(j.at("half_extents"), "half_extents")), j);
    if (kind == "torus")
        return with_center(make_torus(num(j, "major_radius"), num(j, "minor_radius")), j);
    if (kind == "plane-slab") return with_center(make_plane_slab(num(j, "half_x"), num(j, "half_y")), j);
    if (kind == "open-disk") return with_center(make_open_disk(num(j, "radius")), j);
    if (kind == "union" || kind == "intersection") {
        if (!j.contains("children") || !j.at("children").is_array() || j.at("children").empty())
            throw FormatError(kind + " needs a nonempty 'children' array");
        std::vector<FieldPtr> children;
        for (const auto& c : j.at("children")) children.push_back(field_from_json(c, base_dir));
        return kind == "union" ? make_union(std::move(children)) : make_intersection(std::move(children));
    }
    if (kind == "translate")
        return make_translate(field_from_json(j.at("child"), base_dir), vec_from(j.at("offset"), "offset"));
    if (kind == "scale") return make_scale(field_from_json(j.at("child"), base_dir), num(j, "factor"));
    if (kind == "mesh-udf") {
        const std::string rel = j.at("path").get<std::string>();
        const std::string path = (rel.empty() || rel[0] == '/') ? rel : base_dir + "/" + rel;
        auto mesh = std::make_shared<TriangleMesh>(read_obj(path));
        return make_mesh_udf(std::move(mesh), j.value("ray_parity_sign", false));
    }
    if (kind == "corrupted") {
        return make_corrupted(field_from_json(j.at("child"), base_dir), j.value("clamp", 0.1),
                              num(j, "sigma"), j.value("seed", std::uint64_t{0}));
    }
    throw FormatError("unknown field kind '" + kind + "'");
}

std::vector<CorpusShape> corpus_from_json(const json& j, const std::string& base_dir) {
    std::vector<CorpusShape> out;
    if (j.is_object() && j.contains("shapes")) {
        int index = 0;
        for (const auto& s : j.at("shapes")) {
            CorpusShape shape;
            shape.name = s.value("name", "shape_" + std::to_string(index));
            shape.source = field_from_json(s.contains("source") ? s.at("source") : s, base_dir);
            out.push_back(std::move(shape));
            ++index;
        }
        return out;
    }
    // bare source tree: a single unnamed shape
    out.push_back({"shape_0", field_from_json(j, base_dir)});
    return out;
}

namespace {

std::string parent_dir(const std::string& path) {
    const auto pos = path.find_last_of('/');
    return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    }
    return j;
}

} // namespace

std::vector<CorpusShape> load_corpus(const std::string& path) {
    return corpus_from_json(parse_file(path), parent_dir(path));
}

CorpusShape load_shape(const std::string& path) {
    auto shapes = load_corpus(path);
    if (shapes.empty()) throw FormatError(path + ": no shapes");
    return shapes.front();
}

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

json random_primitive(Rng& rng, const GenParams& p, const Vec3& center) {
    const double pick = rng.next_unit();
    json prim;
    if (pick < 0.4) {
        prim["kind"] = "sphere";
        prim["radius"] = round6(rng.next_range(std::max(0.10, p.min_size), p.max_size));
    } else if (pick < 0.7) {
        prim["kind"] = "box";
        prim["half_extents"] = {round6(rng.next_range(0.08, p.max_size)),
                                round6(rng.next_range(0.08, p.max_size)),
                                round6(rng.next_range(0.08, p.max_size))};
    } else {
        const double major = rng.next_range(std::max(0.12, p.min_size), p.max_size);
        const double minor = rng.next_range(std::max(0.045, 0.3 * major), 0.6 * major);
        prim["kind"] = "torus";
        prim["major_radius"] = round6(major);
        prim["minor_radius"] = round6(minor);
    }
    prim["center"] = {round6(center.x), round6(center.y), round6(center.z)};
    return prim;
}

} // namespace

json generate_corpus(int count, std::uint64_t seed, const GenParams& params) {
    Rng rng(substream(seed, Stream::corpus));
    json shapes = json::array();
    for (int s = 0; s < count; ++s) {
        const Vec3 c0{rng.next_range(-params.center_range, params.center_range),
                      rng.next_range(-params.center_range, params.center_range),
                      rng.next_range(-params.center_range, params.center_range)};
        json source;
        if (rng.next_unit() < params.intersection_prob) {
            // lens: two overlapping spheres
            const double r = rng.next_range(std::max(0.14, params.min_size), params.max_size);
            const double gap = rng.next_range(0.2 * r, 0.8 * r);
            json a, b;
            a["kind"] = b["kind"] = "sphere";
            a["radius"] = b["radius"] = round6(r);
            a["center"] = {round6(c0.x - gap * 0.5), round6(c0.y), round6(c0.z)};
            b["center"] = {round6(c0.x + gap * 0.5), round6(c0.y), round6(c0.z)};
            source["kind"] = "intersection";
            source["children"] = {a, b};
        } else {
            const int parts = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(params.max_parts)));
            if (parts == 1) {
                source = random_primitive(rng, params, c0);
            } else {
                json children = json::array();
                for (int part = 0; part < parts; ++part) {
                    Vec3 c = c0;
                    if (part > 0) {
                        c.x += rng.next_range(-params.part_spread, params.part_spread);
                        c.y += rng.next_range(-params.part_spread, params.part_spread);
                        c.z += rng.next_range(-params.part_spread, params.part_spread);
                    }
                    children.push_back(random_primitive(rng, params, c));
                }
                source["kind"] = "union";
                source["children"] = std::move(children);
            }
        }
        json shape;
        char name[32];
        std::snprintf(name, sizeof name, "shape_%03d", s);
        shape["name"] = name;
        shape["source"] = std::move(source);
        shapes.push_back(std::move(shape));
    }
    json doc;
    doc["shapes"] = std::move(shapes);
    return doc;
}

void write_corpus(const json& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << corpus.dump(2) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace udfmesh
