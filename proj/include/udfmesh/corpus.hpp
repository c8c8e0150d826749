#pragma once

#include "udfmesh/corpus_types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace udfmesh {

// Field sources serialize as JSON trees:
//   {"kind": "sphere", "radius": 0.2, "center": [x,y,z]}
//   {"kind": "box", "half_extents": [x,y,z], "center": ...}
//   {"kind": "torus", "major_radius": R, "minor_radius": r, "center": ...}
//   {"kind": "plane-slab", "half_x": a, "half_y": b, "center": ...}
//   {"kind": "open-disk", "radius": r, "center": ...}
//   {"kind": "union" | "intersection", "children": [ ... ]}
//   {"kind": "translate", "offset": [x,y,z], "child": ...}
//   {"kind": "scale", "factor": s, "child": ...}
//   {"kind": "mesh-udf", "path": "mesh.obj", "ray_parity_sign": false}
//   {"kind": "corrupted", "child": ..., "clamp": 0.1, "sigma": 0.3, "seed": 7}
// "center" on a primitive is sugar for wrapping it in a translate. mesh-udf
// paths resolve relative to base_dir.
FieldPtr field_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

// A corpus document is {"shapes": [{"name": ..., "source": {...}}, ...]}.
// A bare source tree is also accepted for single-shape files.
std::vector<CorpusShape> corpus_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
std::vector<CorpusShape> load_corpus(const std::string& path);

// Loads a single shape: either a corpus file (first shape is taken) or a
// bare source tree.
CorpusShape load_shape(const std::string& path);

struct GenParams {
    double min_size = 0.14;
    double max_size = 0.26;
    int max_parts = 3;
    double center_range = 0.32;   // shape centers in [-range, range]^3
    double part_spread = 0.18;    // offsets of extra union parts
    double intersection_prob = 0.15;
};

// Seeded random corpus of watertight analytic/CSG shapes (spheres, boxes,
// tori, unions, occasional two-sphere intersections). Deterministic bytes per
// (count, seed, params).
nlohmann::json generate_corpus(int count, std::uint64_t seed, const GenParams& params = {});

void write_corpus(const nlohmann::json& corpus, const std::string& path);

} // namespace udfmesh
