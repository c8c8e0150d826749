#pragma once

#include "udfmesh/cells.hpp"
#include "udfmesh/grid.hpp"
#include "udfmesh/nnet.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace udfmesh {

struct RefineConfig {
    int iterations = 6;
    double clamp = 0.1;
    double freeze_threshold = 0.999; // max softmax above this freezes the cell
    bool freeze_enabled = true;
    bool frozen_feed_zeros = false; // ablation: frozen cells feed zeros instead of their last beliefs
    double noise_sigma = 0.0;       // inference corruption; applied to the field before sampling
    std::uint64_t seed = 0;
    int threads = 0;

    void validate() const;
};

struct RefineResult {
    std::vector<CellCoord> cells; // active cells
    std::vector<std::uint8_t> categories;
    std::vector<std::vector<std::uint8_t>> snapshots; // categories after each iteration
    std::vector<int> frozen_at;                       // 1-based iteration, 0 = never frozen
    std::uint64_t forward_passes = 0;
    std::vector<std::uint64_t> passes_per_iteration;
};

// Resumable inference engine. Iterations are synchronous (Jacobi): every cell
// reads only the previous iteration's beliefs, so the processing order of
// cells has no effect on the result. Frozen cells stop being evaluated but
// keep feeding their last beliefs to neighbors (unless frozen_feed_zeros).
class Refiner {
public:
    // order_override substitutes the internal active-cell ordering (used by
    // order-invariance tests); it must be a permutation of the active set.
    Refiner(const MlpModel& model, const SampledGrid& grid, const RefineConfig& config,
            const std::vector<CellCoord>* order_override = nullptr);

    void step();
    void run(int iterations);
    int iterations_done() const { return iterations_done_; }
    const RefineResult& result() const { return result_; }

private:
    const MlpModel* model_;
    RefineConfig config_;
    Matrix features_; // B x 32
    Matrix beliefs_;  // B x C, previous iteration (zeros before the first)
    Matrix feed_;     // belief view presented to neighbors (differs when frozen_feed_zeros)
    std::vector<std::array<std::int32_t, kNeighborSlots>> neighbors_;
    std::vector<std::uint8_t> frozen_;
    RefineResult result_;
    int iterations_done_ = 0;
    bool checked_belief_positivity_ = false;
};

// Runs config.iterations refinement passes. An empty active set yields an
// empty result.
RefineResult refine(const MlpModel& model, const SampledGrid& grid, const RefineConfig& config);

// Signed corner magnitudes of the active cells: mask bit set means negative
// corner, magnitudes are the raw grid values. Inactive cells are uniformly
// positive and carry no surface.
struct PseudoCell {
    CellCoord coord;
    std::uint8_t mask = 0;
    std::array<double, 8> magnitudes{};
};

std::vector<PseudoCell> pseudo_sdf(const SampledGrid& grid, const std::vector<CellCoord>& cells,
                                   const std::vector<std::uint8_t>& categories);

} // namespace udfmesh
