#include "udfmesh/trainer.hpp"

#include "udfmesh/errors.hpp"
#include "udfmesh/rng.hpp"
#include "udfmesh/signconfig.hpp"
#include "udfmesh/threads.hpp"

#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>

namespace udfmesh {

void TrainConfig::validate() const {
    if (epochs < 1) throw Error("epochs must be >= 1");
    if (max_extra_iterations < 0 || max_extra_iterations > 8)
        throw Error("max extra iterations must be in [0, 8]");
    if (noise_sigma < 0.0) throw Error("noise sigma must be nonnegative");
    if (lr <= 0.0) throw Error("learning rate must be positive");
    if (clamp <= 0.0) throw Error("clamp must be positive");
}

std::vector<ShapeGridSample> build_dataset(const std::vector<CorpusShape>& corpus, const GridSpec& spec,
                                           double clamp, std::uint64_t seed,
                                           const std::function<void(const std::string&)>& on_warning,
                                           int threads) {
    spec.validate();
    (void)seed; // reserved for corpora with stochastic sources
    std::vector<ShapeGridSample> out;
    out.reserve(corpus.size());
    for (const CorpusShape& shape : corpus) {
        if (!shape.source->signed_capable())
            throw UnsupportedKindError("corpus shape '" + shape.name + "' is not signed-capable");
        const SampledGrid grid = sample_grid(*shape.source, spec, threads);
        ShapeGridSample sample;
        sample.shape_id = shape.name;
        sample.resolution = spec.resolution;
        sample.coords = select_active(grid, clamp);
        if (sample.coords.empty() && on_warning)
            on_warning("shape '" + shape.name + "' has no active cells at resolution " +
                       std::to_string(spec.resolution));
        sample.features.resize(sample.coords.size() * kLocalFeatures);
        sample.labels.resize(sample.coords.size());
        double feat[kLocalFeatures];
        for (std::size_t c = 0; c < sample.coords.size(); ++c) {
            cell_features(grid, sample.coords[c], feat);
            for (int f = 0; f < kLocalFeatures; ++f)
                sample.features[c * kLocalFeatures + f] = static_cast<float>(feat[f]);
            sample.labels[c] =
                label_from_signed(*shape.source, spec, sample.coords[c].i, sample.coords[c].j, sample.coords[c].k);
        }
        sample.rebuild_neighbors();
        out.push_back(std::move(sample));
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'U', 'D', 'F', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) throw FormatError(path + ": truncated dataset file");
    return v;
}

} // namespace

void save_dataset(const std::vector<ShapeGridSample>& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(dataset.size()));
    for (const ShapeGridSample& s : dataset) {
        write_u32(out, static_cast<std::uint32_t>(s.resolution));
        write_u32(out, static_cast<std::uint32_t>(s.cell_count()));
        std::vector<std::uint16_t> coords(s.cell_count() * 3);
        for (std::size_t c = 0; c < s.cell_count(); ++c) {
            coords[3 * c + 0] = static_cast<std::uint16_t>(s.coords[c].i);
            coords[3 * c + 1] = static_cast<std::uint16_t>(s.coords[c].j);
            coords[3 * c + 2] = static_cast<std::uint16_t>(s.coords[c].k);
        }
        out.write(reinterpret_cast<const char*>(coords.data()),
                  static_cast<std::streamsize>(coords.size() * 2));
        out.write(reinterpret_cast<const char*>(s.features.data()),
                  static_cast<std::streamsize>(s.features.size() * 4));
        out.write(reinterpret_cast<const char*>(s.labels.data()),
                  static_cast<std::streamsize>(s.labels.size()));
    }
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<ShapeGridSample> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path + ": not a dataset file (bad magic)");
    if (read_u32(in, path) != kVersion) throw FormatError(path + ": unsupported dataset version");
    const std::uint32_t shapes = read_u32(in, path);
    std::vector<ShapeGridSample> out;
    out.reserve(shapes);
    for (std::uint32_t si = 0; si < shapes; ++si) {
        ShapeGridSample s;
        s.shape_id = "shape_" + std::to_string(si);
        s.resolution = static_cast<int>(read_u32(in, path));
        const std::uint32_t count = read_u32(in, path);
        s.coords.resize(count);
        std::vector<std::uint16_t> coords(static_cast<std::size_t>(count) * 3);
        if (!in.read(reinterpret_cast<char*>(coords.data()), static_cast<std::streamsize>(coords.size() * 2)))
            throw FormatError(path + ": truncated dataset file");
        for (std::uint32_t c = 0; c < count; ++c)
            s.coords[c] = {coords[3 * c + 0], coords[3 * c + 1], coords[3 * c + 2]};
        s.features.resize(static_cast<std::size_t>(count) * kLocalFeatures);
        if (!in.read(reinterpret_cast<char*>(s.features.data()),
                     static_cast<std::streamsize>(s.features.size() * 4)))
            throw FormatError(path + ": truncated dataset file");
        s.labels.resize(count);
        if (!in.read(reinterpret_cast<char*>(s.labels.data()), static_cast<std::streamsize>(count)))
            throw FormatError(path + ": truncated dataset file");
        s.rebuild_neighbors();
        out.push_back(std::move(s));
    }
    return out;
}

Matrix noise_features(const ShapeGridSample& sample, double sigma, std::uint64_t noise_seed,
                      std::uint64_t shape_index, std::uint64_t epoch) {
    const std::size_t B = sample.cell_count();
    Matrix feats(B, kLocalFeatures);
    for (std::size_t c = 0; c < B; ++c) {
        const float* src = sample.features.data() + c * kLocalFeatures;
        double* dst = feats.row(c);
        if (sigma <= 0.0) {
            for (int f = 0; f < kLocalFeatures; ++f) dst[f] = src[f];
            continue;
        }
        const CellCoord& cc = sample.coords[c];
        for (int corner = 0; corner < 8; ++corner) {
            const auto off = corner_offset(corner);
            const std::uint64_t vkey =
                pack_cell(cc.i + off[0], cc.j + off[1], cc.k + off[2]);
            const double nv = keyed_normal(noise_seed, shape_index, epoch, vkey, std::uint64_t{0});
            const double ng = keyed_normal(noise_seed, shape_index, epoch, vkey, std::uint64_t{1});
            dst[corner] = std::max(static_cast<double>(src[corner]) * (1.0 + sigma * nv), 0.0);
            const double gs = 1.0 + sigma * ng;
            dst[8 + 3 * corner + 0] = src[8 + 3 * corner + 0] * gs;
            dst[8 + 3 * corner + 1] = src[8 + 3 * corner + 1] * gs;
            dst[8 + 3 * corner + 2] = src[8 + 3 * corner + 2] * gs;
        }
    }
    return feats;
}

namespace {

std::vector<std::uint32_t> all_rows(std::size_t n) {
    std::vector<std::uint32_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
    return rows;
}

} // namespace

namespace {

// One layer of X * W^T + b with optional leaky ReLU; K may restrict the
// contraction to the first K input columns (iteration 1 of the unrolled loop
// feeds all-zero beliefs, so only the 32 local columns contribute).
void layer_nt(std::size_t B, const double* X, std::size_t ldx, std::size_t K, const Matrix& W,
              const std::vector<double>& bias, Matrix& out, bool hidden, double slope, int threads) {
    out = Matrix(B, W.rows);
    gemm_nt(B, W.rows, K, X, ldx, W.a.data(), W.cols, out.a.data(), out.cols, false, threads);
    parallel_for(B, threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            double* row = out.row(r);
            for (std::size_t j = 0; j < out.cols; ++j) {
                double v = row[j] + bias[j];
                if (hidden && v < 0.0) v *= slope;
                row[j] = v;
            }
        }
    });
}

void leaky_mask(const Matrix& act, Matrix& grad, double slope, int threads) {
    parallel_for(grad.rows, threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            double* g = grad.row(r);
            const double* a = act.row(r);
            for (std::size_t j = 0; j < grad.cols; ++j)
                if (a[j] <= 0.0) g[j] *= slope;
        }
    });
}

void add_column_sums(const Matrix& m, std::vector<double>& out, int threads) {
    parallel_for(out.size(), threads, [&](std::size_t c0, std::size_t c1) {
        for (std::size_t c = c0; c < c1; ++c) {
            double s = out[c];
            for (std::size_t r = 0; r < m.rows; ++r) s += m.at(r, c);
            out[c] = s;
        }
    });
}

// hidden activations kept per unrolled iteration (recomputed instead when the
// shape is too large for the buffer budget)
constexpr std::size_t kTraceBudgetBytes = std::size_t{1536} * 1024 * 1024;

} // namespace

double unrolled_loss_and_grad(const MlpModel& model, const ShapeGridSample& sample,
                              const Matrix& noised_features, int iterations, ParamGrads& grads,
                              int threads) {
    const std::size_t B = sample.cell_count();
    const std::size_t C = model.output_dim();
    if (model.num_layers() != 3)
        throw DimensionError("the unrolled trainer expects the 2-hidden-layer topology");
    if (input_width(C) != model.input_dim())
        throw DimensionError("model input width does not match 32 + 7 * categories");
    if (noised_features.rows != B || noised_features.cols != kLocalFeatures)
        throw DimensionError("feature matrix shape mismatch");
    for (std::uint8_t l : sample.labels)
        if (l >= C) throw DimensionError("label out of range for model output");
    if (B == 0 || iterations < 1) return 0.0;

    const std::vector<std::uint32_t> rows = all_rows(B);
    const Matrix& W1 = model.weights[0];
    const Matrix& W2 = model.weights[1];
    const Matrix& W3 = model.weights[2];
    const double slope = model.leaky_slope;
    const std::size_t h1 = W1.rows, h2 = W2.rows;

    const bool keep_hidden =
        B * (h1 + h2) * sizeof(double) * static_cast<std::size_t>(iterations) <= kTraceBudgetBytes;

    // iteration it reads X built from beliefs[it]; beliefs[0] is the all-zero
    // "no prior information" vector, distinct from any sigmoid output
    std::vector<Matrix> logits(static_cast<std::size_t>(iterations));
    std::vector<Matrix> beliefs(static_cast<std::size_t>(iterations) + 1);
    std::vector<Matrix> hidden1, hidden2;
    if (keep_hidden) {
        hidden1.resize(static_cast<std::size_t>(iterations));
        hidden2.resize(static_cast<std::size_t>(iterations));
    }
    beliefs[0] = Matrix(B, C);
    assert([&] {
        for (double v : beliefs[0].a)
            if (v != 0.0) return false;
        return true;
    }());

    Matrix X;
    const auto input_view = [&](int it) {
        // iteration 1 contracts over the 32 local columns only
        struct View {
            const double* data;
            std::size_t ld, k;
        };
        if (it == 0) return View{noised_features.a.data(), static_cast<std::size_t>(kLocalFeatures),
                                 static_cast<std::size_t>(kLocalFeatures)};
        return View{X.a.data(), input_width(C), input_width(C)};
    };

    const auto forward_iteration = [&](int it, Matrix& head1, Matrix& head2, Matrix& lg) {
        const auto view = input_view(it);
        layer_nt(B, view.data, view.ld, view.k, W1, model.biases[0], head1, true, slope, threads);
        layer_nt(B, head1.a.data(), h1, h1, W2, model.biases[1], head2, true, slope, threads);
        layer_nt(B, head2.a.data(), h2, h2, W3, model.biases[2], lg, false, slope, threads);
    };

    double total_loss = 0.0;
    {
        Matrix head1, head2;
        for (int it = 0; it < iterations; ++it) {
            if (it > 0) assemble_inputs(noised_features, beliefs[it], sample.neighbors, rows, X, threads);
            forward_iteration(it, head1, head2, logits[it]);
            total_loss += softmax_cross_entropy(logits[it], sample.labels, nullptr);
            sigmoid_into(logits[it], beliefs[it + 1]);
            if (keep_hidden) {
                hidden1[static_cast<std::size_t>(it)] = std::move(head1);
                hidden2[static_cast<std::size_t>(it)] = std::move(head2);
            }
        }
    }
    if (!std::isfinite(total_loss)) return total_loss; // caller raises the divergence guard

    // reverse pass: inject each iteration's CE gradient, add the backflow
    // from iteration it+1 through the sigmoid feedback, and accumulate
    // parameter gradients with shared weights
    Matrix backflow;
    Matrix recompute1, recompute2, discard;
    for (int it = iterations - 1; it >= 0; --it) {
        Matrix dz;
        softmax_cross_entropy(logits[it], sample.labels, &dz);
        if (it + 1 < iterations)
            for (std::size_t i = 0; i < dz.a.size(); ++i) dz.a[i] += backflow.a[i];

        if (it > 0) assemble_inputs(noised_features, beliefs[it], sample.neighbors, rows, X, threads);
        const Matrix* H1;
        const Matrix* H2;
        if (keep_hidden) {
            H1 = &hidden1[static_cast<std::size_t>(it)];
            H2 = &hidden2[static_cast<std::size_t>(it)];
        } else {
            forward_iteration(it, recompute1, recompute2, discard);
            H1 = &recompute1;
            H2 = &recompute2;
        }
        const auto view = input_view(it);

        // dW3 += dz^T H2 ; dz -> dH2
        gemm_tn(W3.rows, W3.cols, B, dz.a.data(), dz.cols, H2->a.data(), H2->cols, grads.dw[2].a.data(),
                grads.dw[2].cols, true, threads);
        add_column_sums(dz, grads.db[2], threads);
        Matrix dh2(B, h2);
        gemm_nn(B, h2, C, dz.a.data(), dz.cols, W3.a.data(), W3.cols, dh2.a.data(), dh2.cols, false, threads);
        leaky_mask(*H2, dh2, slope, threads);

        gemm_tn(W2.rows, W2.cols, B, dh2.a.data(), dh2.cols, H1->a.data(), H1->cols, grads.dw[1].a.data(),
                grads.dw[1].cols, true, threads);
        add_column_sums(dh2, grads.db[1], threads);
        Matrix dh1(B, h1);
        gemm_nn(B, h1, h2, dh2.a.data(), dh2.cols, W2.a.data(), W2.cols, dh1.a.data(), dh1.cols, false,
                threads);
        leaky_mask(*H1, dh1, slope, threads);

        // dW1 over the populated input columns only
        gemm_tn(W1.rows, view.k, B, dh1.a.data(), dh1.cols, view.data, view.ld, grads.dw[0].a.data(),
                grads.dw[0].cols, true, threads);
        add_column_sums(dh1, grads.db[0], threads);

        if (it > 0) {
            // input gradient of the belief block: dX = dh1 * W1[:, 32:]
            const std::size_t belief_cols = input_width(C) - kLocalFeatures;
            Matrix dxb(B, belief_cols);
            gemm_nn(B, belief_cols, h1, dh1.a.data(), dh1.cols, W1.a.data() + kLocalFeatures, W1.cols,
                    dxb.a.data(), dxb.cols, false, threads);

            // scatter onto iteration it-1 logits through the sigmoid:
            // d/dlogit = dX[slot block] * b (1 - b), b = sigmoid(logits[it-1])
            backflow = Matrix(B, C);
            const Matrix& b_prev = beliefs[it];
            for (std::size_t r = 0; r < B; ++r) {
                const double* dx = dxb.row(r);
                for (int s = 0; s < kNeighborSlots; ++s) {
                    const std::int32_t nb = sample.neighbors[r][s];
                    if (nb < 0) continue;
                    const double* bp = b_prev.row(static_cast<std::size_t>(nb));
                    double* bf = backflow.row(static_cast<std::size_t>(nb));
                    const double* dslot = dx + static_cast<std::size_t>(s) * C;
                    for (std::size_t c = 0; c < C; ++c) bf[c] += dslot[c] * bp[c] * (1.0 - bp[c]);
                }
            }
        }
    }
    return total_loss;
}

TrainResult train(const TrainConfig& config, const std::vector<ShapeGridSample>& dataset,
                  const std::function<void(const TrainStepLog&)>& on_step) {
    config.validate();
    if (dataset.empty()) throw Error("training dataset is empty");

    TrainResult result;
    result.model = init_weights(config.seed);
    AdamState adam = make_adam(result.model, config.lr);
    ParamGrads grads = make_zero_grads(result.model);
    Rng order_rng(substream(config.seed, Stream::shuffle));
    const std::uint64_t noise_seed = substream(config.seed, Stream::train_noise);

    std::vector<std::uint32_t> order(dataset.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        order_rng.shuffle(order.data(), order.size());
        double epoch_loss = 0.0;
        std::size_t steps = 0;
        for (const std::uint32_t s : order) {
            const ShapeGridSample& sample = dataset[s];
            const int r = 1 + static_cast<int>(order_rng.next_below(
                                  static_cast<std::uint64_t>(config.max_extra_iterations) + 1));
            if (sample.cell_count() == 0) continue;

            const Matrix feats = noise_features(sample, config.noise_sigma, noise_seed, s,
                                                static_cast<std::uint64_t>(epoch));
            grads.zero();
            const double loss =
                unrolled_loss_and_grad(result.model, sample, feats, r, grads, config.threads);
            if (!std::isfinite(loss))
                throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                            ", shape '" + sample.shape_id + "'");
            adam_step(result.model, adam, grads, config.threads);

            TrainStepLog log{epoch, sample.shape_id, r, loss};
            if (on_step) on_step(log);
            result.log.push_back(std::move(log));
            epoch_loss += loss;
            ++steps;
        }
        result.epoch_mean_loss.push_back(steps > 0 ? epoch_loss / static_cast<double>(steps) : 0.0);
    }
    return result;
}

AccuracyReport eval_accuracy(const MlpModel& model, const std::vector<ShapeGridSample>& dataset,
                             int iterations, double sigma, std::uint64_t seed, int threads) {
    AccuracyReport report;
    report.per_iteration.assign(static_cast<std::size_t>(iterations), 0.0);
    std::vector<std::size_t> correct(static_cast<std::size_t>(iterations), 0);
    const std::uint64_t noise_seed = substream(seed, Stream::train_noise);

    for (std::size_t s = 0; s < dataset.size(); ++s) {
        const ShapeGridSample& sample = dataset[s];
        const std::size_t B = sample.cell_count();
        if (B == 0) continue;
        report.cells += B;
        const Matrix feats = noise_features(sample, sigma, noise_seed, s, 0);
        const std::vector<std::uint32_t> rows = all_rows(B);
        Matrix beliefs(B, model.output_dim());
        Matrix X;
        for (int it = 0; it < iterations; ++it) {
            assemble_inputs(feats, beliefs, sample.neighbors, rows, X, threads);
            const Matrix logits = forward(model, X, threads);
            for (std::size_t r = 0; r < B; ++r) {
                const double* z = logits.row(r);
                std::size_t arg = 0;
                for (std::size_t c = 1; c < logits.cols; ++c)
                    if (z[c] > z[arg]) arg = c; // ties keep the lowest id
                if (arg == sample.labels[r]) ++correct[static_cast<std::size_t>(it)];
            }
            sigmoid_into(logits, beliefs);
        }
    }
    if (report.cells > 0)
        for (int it = 0; it < iterations; ++it)
            report.per_iteration[static_cast<std::size_t>(it)] =
                static_cast<double>(correct[static_cast<std::size_t>(it)]) / static_cast<double>(report.cells);
    return report;
}

} // namespace udfmesh
