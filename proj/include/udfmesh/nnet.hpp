#pragma once

#include "udfmesh/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace udfmesh {

// Fully connected classifier over per-cell features. The production topology
// is 928 -> 1024 -> 1024 -> 128 (leaky ReLU 0.01 on hidden layers, raw
// logits out); smaller dims are used by gradient-check tests. Arithmetic is
// 64-bit throughout, weights serialize as 32-bit.
struct MlpModel {
    std::vector<std::size_t> dims;
    std::vector<Matrix> weights; // layer l: dims[l+1] x dims[l]
    std::vector<std::vector<double>> biases;
    double leaky_slope = 0.01;

    std::size_t num_layers() const { return weights.size(); }
    std::size_t input_dim() const { return dims.front(); }
    std::size_t output_dim() const { return dims.back(); }
    std::size_t parameter_count() const;
};

inline std::vector<std::size_t> default_dims() { return {928, 1024, 1024, 128}; }

// Zero-initialized model of the given topology.
MlpModel make_model(std::vector<std::size_t> dims = default_dims());

// Kaiming-uniform weights scaled for the leaky-ReLU fan-in, zero biases.
// Deterministic per seed.
MlpModel init_weights(std::uint64_t seed, std::vector<std::size_t> dims = default_dims());

// Per-layer post-activation outputs; the last entry holds the raw logits.
struct ForwardTrace {
    std::vector<Matrix> act;
    const Matrix& logits() const { return act.back(); }
};

Matrix forward(const MlpModel& model, const Matrix& X, int threads = 0);
ForwardTrace forward_trace(const MlpModel& model, const Matrix& X, int threads = 0);

struct ParamGrads {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;
    void zero();
};

ParamGrads make_zero_grads(const MlpModel& model);

// Backpropagates dLogits through the trace, accumulating parameter gradients
// into `grads`. When dX is non-null it receives the gradient with respect to
// the input batch (overwritten, not accumulated). Pure in the model.
void backward(const MlpModel& model, const Matrix& X, const ForwardTrace& trace, const Matrix& dLogits,
              ParamGrads& grads, Matrix* dX = nullptr, int threads = 0);

// Mean cross-entropy of softmax(logits) against integer targets. When
// dLogits is non-null it receives (softmax - onehot) / batch.
double softmax_cross_entropy(const Matrix& logits, const std::vector<std::uint8_t>& targets,
                             Matrix* dLogits = nullptr);

// Row-wise softmax probabilities.
Matrix softmax(const Matrix& logits);

// Elementwise logistic sigmoid.
void sigmoid_into(const Matrix& logits, Matrix& out);

struct LossAndGrad {
    double loss = 0.0;
    ParamGrads grads;
};

// Single-pass loss and parameter gradients for one batch.
LossAndGrad loss_and_grad(const MlpModel& model, const Matrix& X, const std::vector<std::uint8_t>& targets,
                          int threads = 0);

struct AdamState {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Matrix> m_w, v_w;
    std::vector<std::vector<double>> m_b, v_b;
};

AdamState make_adam(const MlpModel& model, double lr = 5e-4);

// Standard bias-corrected Adam update; increments the step counter.
void adam_step(MlpModel& model, AdamState& state, const ParamGrads& grads, int threads = 0);

// Little-endian binary weight file: magic "UDFM", u32 version, u32 layer
// count, u32 rows/cols per layer, then per layer f32 weights row-major
// followed by f32 biases.
void save_weights(const MlpModel& model, const std::string& path);
MlpModel load_weights(const std::string& path);

} // namespace udfmesh
