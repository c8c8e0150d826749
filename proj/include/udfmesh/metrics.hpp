#pragma once

#include "udfmesh/mesh.hpp"

#include <cstdint>
#include <vector>

namespace udfmesh {

struct MetricReport {
    double chamfer_l2 = 0.0; // reported x 1e-5 in CSV logs
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double tau = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

// Area-weighted uniform surface samples, deterministic per seed (each sample
// is keyed independently, so the set is order- and thread-independent).
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

// Two-way L2 Chamfer distance: mean squared point-to-mesh distance from
// samples of A to surface B, plus the symmetric term, divided by 2.
double chamfer_l2(const TriangleMesh& a, const TriangleMesh& b, std::size_t count, std::uint64_t seed,
                  int threads = 0);

// Precision = fraction of predicted-surface samples within tau of the ground
// truth, recall the symmetric fraction, f1 their harmonic mean (0 when both
// vanish).
MetricReport f1_score(const TriangleMesh& pred, const TriangleMesh& gt, double tau, std::size_t count,
                      std::uint64_t seed, int threads = 0);

} // namespace udfmesh
