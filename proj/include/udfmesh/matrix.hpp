#pragma once

#include <cstddef>
#include <vector>

namespace udfmesh {

// Dense row-major matrix of doubles. Rows are the batch dimension almost
// everywhere in this codebase.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }
    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    void zero() { a.assign(a.size(), 0.0); }
};

// GEMM kernels used by the network. All of them compute every output entry
// with a fixed, position-independent operation order (ascending k, one FMA
// chain per entry plus a fixed lane reduction), so results are bit-identical
// under any row permutation, any thread count, and any batch slicing.
// threads == 0 uses the process default; parallelism splits output rows.

// C (M x N) = A (M x K) * B^T, B stored N x K. accumulate adds into C.
void gemm_nt(std::size_t M, std::size_t N, std::size_t K,
             const double* A, std::size_t lda,
             const double* B, std::size_t ldb,
             double* C, std::size_t ldc,
             bool accumulate, int threads = 0);

// C (M x N) = A (M x K) * B, B stored K x N.
void gemm_nn(std::size_t M, std::size_t N, std::size_t K,
             const double* A, std::size_t lda,
             const double* B, std::size_t ldb,
             double* C, std::size_t ldc,
             bool accumulate, int threads = 0);

// C (M x N) = A^T * B with A stored K x M, B stored K x N.
void gemm_tn(std::size_t M, std::size_t N, std::size_t K,
             const double* A, std::size_t lda,
             const double* B, std::size_t ldb,
             double* C, std::size_t ldc,
             bool accumulate, int threads = 0);

} // namespace udfmesh
