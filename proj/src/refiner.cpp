#include "udfmesh/refiner.hpp"

#include "udfmesh/errors.hpp"
#include "udfmesh/signconfig.hpp"

#include <algorithm>
#include <cmath>

namespace udfmesh {

void RefineConfig::validate() const {
    if (iterations < 1 || iterations > 16) throw Error("iterations must be in [1, 16]");
    if (!(clamp > 0.0)) throw Error("clamp must be positive");
    if (!(freeze_threshold > 0.0) || freeze_threshold > 1.0)
        throw Error("freeze threshold must be in (0, 1]");
    if (noise_sigma < 0.0) throw Error("noise sigma must be nonnegative");
}

Refiner::Refiner(const MlpModel& model, const SampledGrid& grid, const RefineConfig& config,
                 const std::vector<CellCoord>* order_override)
    : model_(&model), config_(config) {
    config.validate();
    const std::size_t C = model.output_dim();
    if (input_width(C) != model.input_dim())
        throw DimensionError("model input width does not match 32 + 7 * categories");

    result_.cells = order_override ? *order_override : select_active(grid, config.clamp);
    const std::size_t B = result_.cells.size();
    neighbors_ = build_neighbor_table(result_.cells);

    features_ = Matrix(B, kLocalFeatures);
    for (std::size_t r = 0; r < B; ++r) cell_features(grid, result_.cells[r], features_.row(r));

    beliefs_ = Matrix(B, C); // the all-zero "no prior information" encoding
    feed_ = beliefs_;
    frozen_.assign(B, 0);
    result_.categories.assign(B, 0);
    result_.frozen_at.assign(B, 0);
}

void Refiner::step() {
    const std::size_t B = result_.cells.size();
    const std::size_t C = model_->output_dim();
    ++iterations_done_;
    if (B == 0) {
        result_.snapshots.emplace_back();
        result_.passes_per_iteration.push_back(0);
        return;
    }

    std::vector<std::uint32_t> rows;
    rows.reserve(B);
    for (std::uint32_t r = 0; r < B; ++r)
        if (!frozen_[r]) rows.push_back(r);

    if (!rows.empty()) {
        Matrix X;
        assemble_inputs(features_, feed_, neighbors_, rows, X, config_.threads);
        const Matrix logits = forward(*model_, X, config_.threads);
        const Matrix probs = softmax(logits);

        // Jacobi: beliefs_ / feed_ were read above for every row before any
        // write below.
        Matrix new_beliefs;
        sigmoid_into(logits, new_beliefs);
        for (std::size_t x = 0; x < rows.size(); ++x) {
            const std::uint32_t r = rows[x];
            std::copy(new_beliefs.row(x), new_beliefs.row(x) + C, beliefs_.row(r));
            const double* p = probs.row(x);
            std::size_t arg = 0;
            for (std::size_t c = 1; c < C; ++c)
                if (p[c] > p[arg]) arg = c; // ties keep the lowest id
            result_.categories[r] = static_cast<std::uint8_t>(arg);
            if (config_.freeze_enabled && p[arg] > config_.freeze_threshold) {
                frozen_[r] = 1;
                result_.frozen_at[r] = iterations_done_;
            }
        }

        if (!checked_belief_positivity_) {
            // the zero vector marks "no information"; any sigmoid output is
            // strictly positive, so the two can never be confused
            for (std::size_t i = 0; i < new_beliefs.a.size(); ++i)
                if (!(new_beliefs.a[i] > 0.0 && new_beliefs.a[i] < 1.0))
                    throw Error("belief outside (0,1); logits out of sane range");
            checked_belief_positivity_ = true;
        }
    }

    if (config_.frozen_feed_zeros) {
        feed_ = beliefs_;
        for (std::size_t r = 0; r < B; ++r)
            if (frozen_[r]) std::fill(feed_.row(r), feed_.row(r) + C, 0.0);
    } else {
        feed_ = beliefs_;
    }

    result_.forward_passes += rows.size();
    result_.passes_per_iteration.push_back(rows.size());
    result_.snapshots.push_back(result_.categories);
}

void Refiner::run(int iterations) {
    for (int i = 0; i < iterations; ++i) step();
}

RefineResult refine(const MlpModel& model, const SampledGrid& grid, const RefineConfig& config) {
    Refiner engine(model, grid, config);
    engine.run(config.iterations);
    return engine.result();
}

std::vector<PseudoCell> pseudo_sdf(const SampledGrid& grid, const std::vector<CellCoord>& cells,
                                   const std::vector<std::uint8_t>& categories) {
    if (cells.size() != categories.size()) throw DimensionError("one category per active cell required");
    std::vector<PseudoCell> out(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        PseudoCell& pc = out[c];
        pc.coord = cells[c];
        pc.mask = representative(categories[c]);
        for (int corner = 0; corner < 8; ++corner) {
            const auto off = corner_offset(corner);
            pc.magnitudes[static_cast<std::size_t>(corner)] =
                grid.value(cells[c].i + off[0], cells[c].j + off[1], cells[c].k + off[2]);
        }
    }
    return out;
}

} // namespace udfmesh
