#pragma once

#include "udfmesh/cells.hpp"
#include "udfmesh/corpus_types.hpp"
#include "udfmesh/nnet.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace udfmesh {

// One shape of the training set: its active cells (sorted by (i,j,k)), their
// 32 local features as stored on disk (f32, so the in-memory and file paths
// train identically), ground-truth categories, and the face-neighbor table.
struct ShapeGridSample {
    std::string shape_id;
    int resolution = 0;
    std::vector<CellCoord> coords;
    std::vector<float> features; // 32 per cell
    std::vector<std::uint8_t> labels;
    std::vector<std::array<std::int32_t, kNeighborSlots>> neighbors;

    std::size_t cell_count() const { return coords.size(); }
    void rebuild_neighbors() { neighbors = build_neighbor_table(coords); }
};

// Samples each corpus shape on a clean grid, keeps cells whose minimum corner
// value is below `clamp`, and labels them from the signed field. Shapes with
// an empty active set are kept (with a warning via on_warning) so indices
// stay aligned with the corpus. `seed` is recorded for corpora that contain
// stochastic sources; analytic corpora are deterministic without it.
std::vector<ShapeGridSample> build_dataset(const std::vector<CorpusShape>& corpus, const GridSpec& spec,
                                           double clamp, std::uint64_t seed,
                                           const std::function<void(const std::string&)>& on_warning = {},
                                           int threads = 0);

// Little-endian binary dataset: magic "UDFD", u32 version, u32 shape count,
// then per shape u32 N, u32 active count, coords as u16 triples, features as
// 32 x f32, labels as u8.
void save_dataset(const std::vector<ShapeGridSample>& dataset, const std::string& path);
std::vector<ShapeGridSample> load_dataset(const std::string& path);

struct TrainConfig {
    int epochs = 50;
    double lr = 5e-4;
    int max_extra_iterations = 5; // R; per shape visit r ~ uniform{1, ..., 1+R}
    double noise_sigma = 1.0;
    double clamp = 0.1;
    std::uint64_t seed = 0;
    int threads = 0;

    void validate() const;
};

struct TrainStepLog {
    int epoch = 0;
    std::string shape;
    int iterations = 0;
    double loss = 0.0; // sum over iterations of the per-iteration mean CE
};

struct TrainResult {
    MlpModel model;
    std::vector<TrainStepLog> log;
    std::vector<double> epoch_mean_loss;
};

// Unrolled training: per epoch, shapes are visited in shuffled order; each
// visit draws r, applies fresh multiplicative noise to the shape's features
// (keyed per grid vertex, so cells sharing a vertex see the same draw), runs
// r Jacobi iterations feeding sigmoid beliefs of self + face neighbors, sums
// the per-iteration mean CE, backpropagates through the whole unrolled graph
// including the feedback paths, and takes one Adam step.
TrainResult train(const TrainConfig& config, const std::vector<ShapeGridSample>& dataset,
                  const std::function<void(const TrainStepLog&)>& on_step = {});

// Loss and parameter gradients of one unrolled visit, without updating the
// model. Exposed for the finite-difference oracle on toy graphs; `model` may
// have any topology with input_width(output_dim) inputs.
double unrolled_loss_and_grad(const MlpModel& model, const ShapeGridSample& sample,
                              const Matrix& noised_features, int iterations, ParamGrads& grads,
                              int threads = 0);

// Applies the training corruption to one shape's features: per grid vertex,
// values scale by (1 + sigma*n) floored at 0 and gradients by an independent
// (1 + sigma*n').
Matrix noise_features(const ShapeGridSample& sample, double sigma, std::uint64_t noise_seed,
                      std::uint64_t shape_index, std::uint64_t epoch);

struct AccuracyReport {
    std::vector<double> per_iteration;
    std::size_t cells = 0;
};

// Fraction of cells whose argmax category matches the label, after each of
// `iterations` refinement passes. sigma > 0 evaluates on corrupted features.
AccuracyReport eval_accuracy(const MlpModel& model, const std::vector<ShapeGridSample>& dataset,
                             int iterations, double sigma = 0.0, std::uint64_t seed = 0, int threads = 0);

} // namespace udfmesh
