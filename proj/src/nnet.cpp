#include "udfmesh/nnet.hpp"

#include "udfmesh/errors.hpp"
#include "udfmesh/rng.hpp"
#include "udfmesh/threads.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace udfmesh {

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].a.size() + biases[l].size();
    return n;
}

MlpModel make_model(std::vector<std::size_t> dims) {
    if (dims.size() < 2) throw Error("model needs at least one layer");
    MlpModel m;
    m.dims = std::move(dims);
    for (std::size_t l = 0; l + 1 < m.dims.size(); ++l) {
        m.weights.emplace_back(m.dims[l + 1], m.dims[l]);
        m.biases.emplace_back(m.dims[l + 1], 0.0);
    }
    return m;
}

MlpModel init_weights(std::uint64_t seed, std::vector<std::size_t> dims) {
    MlpModel m = make_model(std::move(dims));
    Rng rng(substream(seed, Stream::weight_init));
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
        const double fan_in = static_cast<double>(m.dims[l]);
        const double gain_sq = 2.0 / (1.0 + m.leaky_slope * m.leaky_slope);
        const double bound = std::sqrt(3.0 * gain_sq / fan_in);
        for (double& w : m.weights[l].a) w = rng.next_range(-bound, bound);
    }
    return m;
}

namespace {

void check_batch(const MlpModel& model, const Matrix& X) {
    if (X.cols != model.input_dim())
        throw DimensionError("batch has " + std::to_string(X.cols) + " features, model expects " +
                             std::to_string(model.input_dim()));
    for (double v : X.a)
        if (!std::isfinite(v)) throw Error("non-finite network input");
}

// out = X * W^T + b, then leaky ReLU when `hidden`.
void layer_forward(const Matrix& X, const Matrix& W, const std::vector<double>& b, Matrix& out,
                   bool hidden, double slope, int threads) {
    out = Matrix(X.rows, W.rows);
    gemm_nt(X.rows, W.rows, X.cols, X.a.data(), X.cols, W.a.data(), W.cols, out.a.data(), out.cols,
            false, threads);
    parallel_for(out.rows, threads, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            double* row = out.row(r);
            for (std::size_t j = 0; j < out.cols; ++j) {
                double v = row[j] + b[j];
                if (hidden && v < 0.0) v *= slope;
                row[j] = v;
            }
        }
    });
}

} // namespace

Matrix forward(const MlpModel& model, const Matrix& X, int threads) {
    check_batch(model, X);
    Matrix cur, next;
    const Matrix* in = &X;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const bool hidden = l + 1 < model.num_layers();
        layer_forward(*in, model.weights[l], model.biases[l], next, hidden, model.leaky_slope, threads);
        cur = std::move(next);
        in = &cur;
    }
    return cur;
}

ForwardTrace forward_trace(const MlpModel& model, const Matrix& X, int threads) {
    check_batch(model, X);
    ForwardTrace t;
    t.act.resize(model.num_layers());
    const Matrix* in = &X;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const bool hidden = l + 1 < model.num_layers();
        layer_forward(*in, model.weights[l], model.biases[l], t.act[l], hidden, model.leaky_slope, threads);
        in = &t.act[l];
    }
    return t;
}

void ParamGrads::zero() {
    for (auto& m : dw) m.zero();
    for (auto& b : db) b.assign(b.size(), 0.0);
}

ParamGrads make_zero_grads(const MlpModel& model) {
    ParamGrads g;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        g.dw.emplace_back(model.weights[l].rows, model.weights[l].cols);
        g.db.emplace_back(model.biases[l].size(), 0.0);
    }
    return g;
}

void backward(const MlpModel& model, const Matrix& X, const ForwardTrace& trace, const Matrix& dLogits,
              ParamGrads& grads, Matrix* dX, int threads) {
    const std::size_t L = model.num_layers();
    if (dLogits.rows != X.rows || dLogits.cols != model.output_dim())
        throw DimensionError("dLogits shape does not match the forward batch");

    Matrix dz = dLogits;
    for (std::size_t l = L; l-- > 0;) {
        const Matrix& input = (l == 0) ? X : trace.act[l - 1];

        // dW_l += dz^T * input ; db_l += column sums of dz
        gemm_tn(model.weights[l].rows, model.weights[l].cols, dz.rows, dz.a.data(), dz.cols,
                input.a.data(), input.cols, grads.dw[l].a.data(), grads.dw[l].cols, true, threads);
        {
            auto& db = grads.db[l];
            parallel_for(db.size(), threads, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c) {
                    double s = db[c];
                    for (std::size_t r = 0; r < dz.rows; ++r) s += dz.at(r, c);
                    db[c] = s;
                }
            });
        }

        const bool need_dinput = (l > 0) || (dX != nullptr);
        if (!need_dinput) break;

        Matrix dinput(dz.rows, model.weights[l].cols);
        gemm_nn(dz.rows, model.weights[l].cols, dz.cols, dz.a.data(), dz.cols, model.weights[l].a.data(),
                model.weights[l].cols, dinput.a.data(), dinput.cols, false, threads);

        if (l > 0) {
            // pass through the leaky ReLU of layer l-1 (post-activation sign
            // recovers the pre-activation sign)
            const Matrix& act = trace.act[l - 1];
            const double slope = model.leaky_slope;
            parallel_for(dinput.rows, threads, [&](std::size_t r0, std::size_t r1) {
                for (std::size_t r = r0; r < r1; ++r) {
                    double* di = dinput.row(r);
                    const double* av = act.row(r);
                    for (std::size_t j = 0; j < dinput.cols; ++j)
                        if (av[j] <= 0.0) di[j] *= slope;
                }
            });
            dz = std::move(dinput);
        } else {
            *dX = std::move(dinput);
        }
    }
}

Matrix softmax(const Matrix& logits) {
    Matrix p(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        const double* z = logits.row(r);
        double* out = p.row(r);
        double m = z[0];
        for (std::size_t j = 1; j < logits.cols; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            out[j] = std::exp(z[j] - m);
            sum += out[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < logits.cols; ++j) out[j] *= inv;
    }
    return p;
}

void sigmoid_into(const Matrix& logits, Matrix& out) {
    out = Matrix(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.a.size(); ++i) out.a[i] = 1.0 / (1.0 + std::exp(-logits.a[i]));
}

double softmax_cross_entropy(const Matrix& logits, const std::vector<std::uint8_t>& targets,
                             Matrix* dLogits) {
    if (targets.size() != logits.rows) throw DimensionError("one target per batch row required");
    for (std::uint8_t t : targets)
        if (t >= logits.cols) throw DimensionError("target category out of range");

    if (dLogits) *dLogits = Matrix(logits.rows, logits.cols);
    const double inv_batch = 1.0 / static_cast<double>(logits.rows);
    double loss = 0.0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        const double* z = logits.row(r);
        double m = z[0];
        for (std::size_t j = 1; j < logits.cols; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) sum += std::exp(z[j] - m);
        const double log_z = std::log(sum);
        loss += log_z - (z[targets[r]] - m);
        if (dLogits) {
            double* d = dLogits->row(r);
            const double inv = 1.0 / sum;
            for (std::size_t j = 0; j < logits.cols; ++j) d[j] = std::exp(z[j] - m) * inv * inv_batch;
            d[targets[r]] -= inv_batch;
        }
    }
    return loss * inv_batch;
}

LossAndGrad loss_and_grad(const MlpModel& model, const Matrix& X, const std::vector<std::uint8_t>& targets,
                          int threads) {
    LossAndGrad out;
    out.grads = make_zero_grads(model);
    const ForwardTrace trace = forward_trace(model, X, threads);
    Matrix dLogits;
    out.loss = softmax_cross_entropy(trace.logits(), targets, &dLogits);
    backward(model, X, trace, dLogits, out.grads, nullptr, threads);
    return out;
}

AdamState make_adam(const MlpModel& model, double lr) {
    AdamState s;
    s.lr = lr;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        s.m_w.emplace_back(model.weights[l].rows, model.weights[l].cols);
        s.v_w.emplace_back(model.weights[l].rows, model.weights[l].cols);
        s.m_b.emplace_back(model.biases[l].size(), 0.0);
        s.v_b.emplace_back(model.biases[l].size(), 0.0);
    }
    return s;
}

void adam_step(MlpModel& model, AdamState& state, const ParamGrads& grads, int threads) {
    if (grads.dw.size() != model.num_layers()) throw DimensionError("gradient layer count mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const double b1 = state.beta1, b2 = state.beta2, lr = state.lr, eps = state.eps;

    std::atomic<bool> bad{false};
    auto update = [&](double* w, double* m, double* v, const double* g, std::size_t n) {
        parallel_for(n, threads, [&](std::size_t i0, std::size_t i1) {
            bool ok = true;
            for (std::size_t i = i0; i < i1; ++i) {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                const double mh = m[i] / bc1;
                const double vh = v[i] / bc2;
                w[i] -= lr * mh / (std::sqrt(vh) + eps);
                ok = ok && std::isfinite(w[i]);
            }
            if (!ok) bad.store(true, std::memory_order_relaxed);
        });
        if (bad.load(std::memory_order_relaxed))
            throw Error("non-finite parameter after optimizer step");
    };
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        if (grads.dw[l].rows != model.weights[l].rows || grads.dw[l].cols != model.weights[l].cols)
            throw DimensionError("gradient shape mismatch at layer " + std::to_string(l));
        update(model.weights[l].a.data(), state.m_w[l].a.data(), state.v_w[l].a.data(),
               grads.dw[l].a.data(), model.weights[l].a.size());
        update(model.biases[l].data(), state.m_b[l].data(), state.v_b[l].data(), grads.db[l].data(),
               model.biases[l].size());
    }
}

namespace {

constexpr char kMagic[4] = {'U', 'D', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) throw FormatError(path + ": truncated weight file");
    return v;
}

} // namespace

void save_weights(const MlpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(model.num_layers()));
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        write_u32(out, static_cast<std::uint32_t>(model.weights[l].rows));
        write_u32(out, static_cast<std::uint32_t>(model.weights[l].cols));
    }
    std::vector<float> buf;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        buf.assign(model.weights[l].a.begin(), model.weights[l].a.end());
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
        buf.assign(model.biases[l].begin(), model.biases[l].end());
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    }
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

MlpModel load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path + ": not a weight file (bad magic)");
    const std::uint32_t version = read_u32(in, path);
    if (version != kVersion)
        throw FormatError(path + ": unsupported weight file version " + std::to_string(version));
    const std::uint32_t layers = read_u32(in, path);
    if (layers == 0 || layers > 64) throw FormatError(path + ": implausible layer count");

    std::vector<std::size_t> dims;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const std::uint32_t rows = read_u32(in, path);
        const std::uint32_t cols = read_u32(in, path);
        if (rows == 0 || cols == 0) throw FormatError(path + ": zero layer dimension");
        if (l == 0) dims.push_back(cols);
        else if (dims.back() != cols)
            throw FormatError(path + ": layer dimension chain mismatch");
        dims.push_back(rows);
        shapes.emplace_back(rows, cols);
    }

    MlpModel model = make_model(dims);
    std::vector<float> buf;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const std::size_t wn = static_cast<std::size_t>(shapes[l].first) * shapes[l].second;
        buf.resize(wn);
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(wn * 4)))
            throw FormatError(path + ": truncated weight file");
        for (std::size_t i = 0; i < wn; ++i) model.weights[l].a[i] = buf[i];
        buf.resize(shapes[l].first);
        if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4)))
            throw FormatError(path + ": truncated weight file");
        for (std::size_t i = 0; i < buf.size(); ++i) model.biases[l][i] = buf[i];
    }
    return model;
}

} // namespace udfmesh
