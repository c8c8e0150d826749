#include "udfmesh/refiner.hpp"

#include "udfmesh/errors.hpp"
#include "udfmesh/rng.hpp"
#include "udfmesh/signconfig.hpp"
#include "udfmesh/trainer.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>

using namespace udfmesh;

namespace {

SampledGrid sphere_grid(int res, double radius = 0.4) {
    GridSpec spec;
    spec.resolution = res;
    return sample_grid(*make_sphere(radius), spec, 0);
}

} // namespace

TEST_CASE("select_active: brute force parity and boundary semantics") {
    const SampledGrid grid = sphere_grid(64, 0.5);
    const auto active = select_active(grid, 0.1);

    // brute force count
    std::size_t expect = 0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j)
            for (int k = 0; k < 64; ++k) {
                double mn = 1e300;
                for (int c = 0; c < 8; ++c) {
                    const auto off = corner_offset(c);
                    mn = std::min(mn, grid.value(i + off[0], j + off[1], k + off[2]));
                }
                if (mn < 0.1) ++expect;
            }
    CHECK(active.size() == expect);

    const double fraction = static_cast<double>(active.size()) / (64.0 * 64.0 * 64.0);
    CHECK(fraction > 0.01);
    CHECK(fraction < 0.15);

    // constant field: nothing is active
    SampledGrid flat;
    flat.spec.resolution = 8;
    flat.values.assign(flat.spec.vertex_count(), 0.5);
    flat.gradients.assign(flat.spec.vertex_count(), Vec3{});
    CHECK(select_active(flat, 0.1).empty());

    // a corner at exactly the clamp value is "equal or above": excluded
    flat.values[flat.spec.vertex_index(4, 4, 4)] = 0.1;
    CHECK(select_active(flat, 0.1).empty());
    flat.values[flat.spec.vertex_index(4, 4, 4)] = 0.0999999;
    CHECK(select_active(flat, 0.1).size() == 8); // the 8 cells sharing that vertex
}

TEST_CASE("refine with iterations=1 is a single-pass classifier") {
    const SampledGrid grid = sphere_grid(16);
    const MlpModel model = init_weights(3);
    RefineConfig config;
    config.iterations = 1;
    config.freeze_enabled = false;
    const RefineResult r = refine(model, grid, config);
    REQUIRE(!r.cells.empty());
    CHECK(r.snapshots.size() == 1);
    CHECK(r.forward_passes == r.cells.size());

    // oracle: assemble zero-feedback inputs directly
    Matrix feats(r.cells.size(), kLocalFeatures);
    for (std::size_t c = 0; c < r.cells.size(); ++c) cell_features(grid, r.cells[c], feats.row(c));
    Matrix beliefs(r.cells.size(), 128);
    std::vector<std::uint32_t> rows(r.cells.size());
    for (std::size_t c = 0; c < rows.size(); ++c) rows[c] = static_cast<std::uint32_t>(c);
    Matrix X;
    assemble_inputs(feats, beliefs, build_neighbor_table(r.cells), rows, X, 1);
    const Matrix logits = forward(model, X, 1);
    for (std::size_t c = 0; c < r.cells.size(); ++c) {
        const double* z = logits.row(c);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < 128; ++j)
            if (z[j] > z[arg]) arg = j;
        CHECK(r.categories[c] == static_cast<std::uint8_t>(arg));
    }
}

TEST_CASE("freeze: monotone, snapshot-stable, and it saves evaluations") {
    const SampledGrid grid = sphere_grid(16);
    const MlpModel model = init_weights(4);
    RefineConfig config;
    config.iterations = 5;
    config.freeze_threshold = 0.0079; // just under the uniform 1/128, so freezing triggers
    const RefineResult r = refine(model, grid, config);
    REQUIRE(!r.cells.empty());

    std::size_t frozen = 0;
    for (std::size_t c = 0; c < r.cells.size(); ++c) {
        if (r.frozen_at[c] > 0) {
            ++frozen;
            for (std::size_t it = static_cast<std::size_t>(r.frozen_at[c]); it < r.snapshots.size(); ++it)
                CHECK(r.snapshots[it][c] == r.snapshots[static_cast<std::size_t>(r.frozen_at[c]) - 1][c]);
        }
    }
    CHECK(frozen > 0);
    // passes drop once cells freeze
    CHECK(r.passes_per_iteration.front() == r.cells.size());
    CHECK(r.passes_per_iteration.back() < r.cells.size());
    CHECK(r.forward_passes < static_cast<std::uint64_t>(r.cells.size()) * 5);

    // disabled freezing evaluates everything every iteration
    RefineConfig nofreeze = config;
    nofreeze.freeze_enabled = false;
    const RefineResult rn = refine(model, grid, nofreeze);
    CHECK(rn.forward_passes == static_cast<std::uint64_t>(rn.cells.size()) * 5);
    for (int f : rn.frozen_at) CHECK(f == 0);
}

TEST_CASE("Jacobi purity: cell processing order does not change results") {
    const SampledGrid grid = sphere_grid(12);
    const MlpModel model = init_weights(5);
    RefineConfig config;
    config.iterations = 3;
    config.freeze_threshold = 0.009;

    const RefineResult base = refine(model, grid, config);
    REQUIRE(!base.cells.empty());

    std::vector<CellCoord> permuted = base.cells;
    Rng rng(17);
    rng.shuffle(permuted.data(), permuted.size());
    Refiner engine(model, grid, config, &permuted);
    engine.run(3);
    const RefineResult& shuffled = engine.result();

    std::map<std::uint64_t, std::uint8_t> by_coord;
    for (std::size_t c = 0; c < base.cells.size(); ++c)
        by_coord[pack_cell(base.cells[c].i, base.cells[c].j, base.cells[c].k)] = base.categories[c];
    for (std::size_t c = 0; c < shuffled.cells.size(); ++c) {
        const auto it = by_coord.find(pack_cell(shuffled.cells[c].i, shuffled.cells[c].j, shuffled.cells[c].k));
        REQUIRE(it != by_coord.end());
        CHECK(it->second == shuffled.categories[c]);
    }
    // snapshots match per iteration as well
    for (std::size_t it = 0; it < 3; ++it) {
        std::map<std::uint64_t, std::uint8_t> snap;
        for (std::size_t c = 0; c < base.cells.size(); ++c)
            snap[pack_cell(base.cells[c].i, base.cells[c].j, base.cells[c].k)] = base.snapshots[it][c];
        for (std::size_t c = 0; c < shuffled.cells.size(); ++c)
            CHECK(snap[pack_cell(shuffled.cells[c].i, shuffled.cells[c].j, shuffled.cells[c].k)] ==
                  shuffled.snapshots[it][c]);
    }
}

TEST_CASE("resumability: k iterations then j more equals k+j directly") {
    const SampledGrid grid = sphere_grid(12);
    const MlpModel model = init_weights(6);
    RefineConfig config;
    config.iterations = 6;
    config.freeze_threshold = 0.009;

    const RefineResult direct = refine(model, grid, config);

    Refiner engine(model, grid, config);
    engine.run(2);
    engine.run(4);
    const RefineResult& resumed = engine.result();

    CHECK(resumed.categories == direct.categories);
    REQUIRE(resumed.snapshots.size() == direct.snapshots.size());
    for (std::size_t it = 0; it < direct.snapshots.size(); ++it)
        CHECK(resumed.snapshots[it] == direct.snapshots[it]);
    CHECK(resumed.forward_passes == direct.forward_passes);
}

TEST_CASE("refine results are thread-count invariant") {
    const SampledGrid grid = sphere_grid(12);
    const MlpModel model = init_weights(8);
    RefineConfig config;
    config.iterations = 2;
    config.threads = 1;
    const RefineResult a = refine(model, grid, config);
    config.threads = 4;
    const RefineResult b = refine(model, grid, config);
    CHECK(a.categories == b.categories);
    CHECK(a.snapshots == b.snapshots);
}

TEST_CASE("empty active set yields an empty result, not an error") {
    SampledGrid flat;
    flat.spec.resolution = 6;
    flat.values.assign(flat.spec.vertex_count(), 0.9);
    flat.gradients.assign(flat.spec.vertex_count(), Vec3{});
    const MlpModel model = init_weights(7);
    RefineConfig config;
    const RefineResult r = refine(model, flat, config);
    CHECK(r.cells.empty());
    CHECK(r.categories.empty());
    CHECK(r.forward_passes == 0);
}

TEST_CASE("pseudo_sdf: oracle categories reproduce true signs up to a flip") {
    const auto sphere = make_sphere(0.4);
    GridSpec spec;
    spec.resolution = 24;
    const SampledGrid grid = sample_grid(*sphere, spec, 0);
    const auto active = select_active(grid, 0.1);
    REQUIRE(!active.empty());

    std::vector<std::uint8_t> categories(active.size());
    for (std::size_t c = 0; c < active.size(); ++c)
        categories[c] = label_from_signed(*sphere, spec, active[c].i, active[c].j, active[c].k);

    const auto cells = pseudo_sdf(grid, active, categories);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const CornerMask truth = signed_corner_mask(*sphere, spec, active[c].i, active[c].j, active[c].k);
        const bool same = cells[c].mask == truth;
        const bool flipped = cells[c].mask == static_cast<CornerMask>(truth ^ 0xFF);
        CHECK((same || flipped));
        // magnitudes are the raw grid values
        for (int corner = 0; corner < 8; ++corner) {
            const auto off = corner_offset(corner);
            CHECK(cells[c].magnitudes[static_cast<std::size_t>(corner)] ==
                  grid.value(active[c].i + off[0], active[c].j + off[1], active[c].k + off[2]));
        }
    }
}

TEST_CASE("frozen cells can feed zeros in the ablation mode") {
    const SampledGrid grid = sphere_grid(12);
    const MlpModel model = init_weights(9);

    // freeze threshold at the median iteration-1 confidence, so roughly half
    // the cells freeze immediately and the rest keep evaluating
    RefineConfig config;
    config.iterations = 4;
    {
        RefineConfig one = config;
        one.iterations = 1;
        one.freeze_enabled = false;
        const RefineResult probe = refine(model, grid, one);
        REQUIRE(!probe.cells.empty());
        Matrix feats(probe.cells.size(), kLocalFeatures);
        for (std::size_t c = 0; c < probe.cells.size(); ++c) cell_features(grid, probe.cells[c], feats.row(c));
        Matrix beliefs(probe.cells.size(), 128);
        std::vector<std::uint32_t> rows(probe.cells.size());
        for (std::size_t c = 0; c < rows.size(); ++c) rows[c] = static_cast<std::uint32_t>(c);
        Matrix X;
        assemble_inputs(feats, beliefs, build_neighbor_table(probe.cells), rows, X, 1);
        const Matrix probs = softmax(forward(model, X, 1));
        std::vector<double> maxima(probs.rows);
        for (std::size_t r = 0; r < probs.rows; ++r)
            maxima[r] = *std::max_element(probs.row(r), probs.row(r) + probs.cols);
        std::nth_element(maxima.begin(), maxima.begin() + maxima.size() / 2, maxima.end());
        config.freeze_threshold = maxima[maxima.size() / 2];
    }
    {
        const RefineResult probe = refine(model, grid, config);
        std::size_t early = 0;
        for (int f : probe.frozen_at) early += (f == 1);
        REQUIRE(early > 0);
        REQUIRE(early < probe.cells.size());
    }

    const RefineResult keep = refine(model, grid, config);
    config.frozen_feed_zeros = true;
    const RefineResult zeros = refine(model, grid, config);
    CHECK(keep.cells.size() == zeros.cells.size());
    // unfrozen neighbors of frozen cells see different inputs, so the two
    // policies must diverge somewhere in the later snapshots
    bool differs = false;
    for (std::size_t it = 1; it < keep.snapshots.size(); ++it)
        differs = differs || (keep.snapshots[it] != zeros.snapshots[it]);
    CHECK(differs);
}
