#include "udfmesh/metrics.hpp"

#include "udfmesh/bvh.hpp"
#include "udfmesh/errors.hpp"
#include "udfmesh/rng.hpp"
#include "udfmesh/threads.hpp"

#include <algorithm>
#include <cmath>

namespace udfmesh {

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
    if (mesh.empty()) throw Error("cannot sample an empty mesh");
    std::vector<Vec3> points;
    if (count == 0) return points;

    std::vector<double> cumulative(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        total += mesh.triangle_area(t);
        cumulative[t] = total;
    }
    if (!(total > 0.0)) throw Error("mesh has zero surface area");

    const std::uint64_t stream = substream(seed, Stream::surface_sampling);
    points.resize(count);
    for (std::size_t s = 0; s < count; ++s) {
        const double pick = keyed_unit(stream, static_cast<std::uint64_t>(s), std::uint64_t{0}) * total;
        const std::size_t t = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
        const auto& tri = mesh.triangles[std::min(t, mesh.triangles.size() - 1)];
        const double r1 = keyed_unit(stream, static_cast<std::uint64_t>(s), std::uint64_t{1});
        const double r2 = keyed_unit(stream, static_cast<std::uint64_t>(s), std::uint64_t{2});
        const double sq = std::sqrt(r1);
        const double u = 1.0 - sq;
        const double v = r2 * sq;
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        points[s] = a * u + b * v + c * (1.0 - u - v);
    }
    return points;
}

namespace {

// Deterministic parallel reduction: fixed-size chunks summed in index order,
// independent of the thread count.
template <typename Fn>
double chunked_sum(std::size_t n, int threads, Fn&& per_item) {
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(chunks, 0.0);
    parallel_for(chunks, threads, [&](std::size_t c0, std::size_t c1) {
        for (std::size_t c = c0; c < c1; ++c) {
            const std::size_t b = c * kChunk;
            const std::size_t e = std::min(n, b + kChunk);
            double s = 0.0;
            for (std::size_t i = b; i < e; ++i) s += per_item(i);
            partial[c] = s;
        }
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

double mean_sq_to_mesh(const std::vector<Vec3>& pts, const TriangleBvh& bvh, int threads) {
    if (pts.empty()) return 0.0;
    const double sum = chunked_sum(pts.size(), threads, [&](std::size_t i) {
        const auto hit = bvh.nearest(pts[i]);
        return hit.distance * hit.distance;
    });
    return sum / static_cast<double>(pts.size());
}

std::size_t count_within(const std::vector<Vec3>& pts, const TriangleBvh& bvh, double tau, int threads) {
    const double c = chunked_sum(pts.size(), threads, [&](std::size_t i) {
        return bvh.nearest(pts[i]).distance <= tau ? 1.0 : 0.0;
    });
    return static_cast<std::size_t>(c + 0.5);
}

} // namespace

double chamfer_l2(const TriangleMesh& a, const TriangleMesh& b, std::size_t count, std::uint64_t seed,
                  int threads) {
    if (a.empty() || b.empty()) throw Error("chamfer distance needs two nonempty meshes");
    // both meshes draw from the same sample stream, which makes the metric
    // exactly symmetric under swapping the arguments
    const std::vector<Vec3> pa = sample_surface(a, count, seed);
    const std::vector<Vec3> pb = sample_surface(b, count, seed);
    const TriangleBvh ba(a), bb(b);
    const double ab = mean_sq_to_mesh(pa, bb, threads);
    const double ba_ = mean_sq_to_mesh(pb, ba, threads);
    return 0.5 * (ab + ba_);
}

MetricReport f1_score(const TriangleMesh& pred, const TriangleMesh& gt, double tau, std::size_t count,
                      std::uint64_t seed, int threads) {
    if (pred.empty() || gt.empty()) throw Error("f1 score needs two nonempty meshes");
    if (!(tau > 0.0)) throw Error("tau must be positive");
    MetricReport report;
    report.tau = tau;
    report.samples = count;
    report.seed = seed;
    const std::vector<Vec3> pp = sample_surface(pred, count, seed);
    const std::vector<Vec3> pg = sample_surface(gt, count, seed);
    const TriangleBvh bp(pred), bg(gt);
    report.precision = count == 0 ? 0.0
                                  : static_cast<double>(count_within(pp, bg, tau, threads)) /
                                        static_cast<double>(pp.size());
    report.recall = count == 0 ? 0.0
                               : static_cast<double>(count_within(pg, bp, tau, threads)) /
                                     static_cast<double>(pg.size());
    const double denom = report.precision + report.recall;
    report.f1 = denom > 0.0 ? 2.0 * report.precision * report.recall / denom : 0.0;
    return report;
}

} // namespace udfmesh
