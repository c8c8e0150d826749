#include "udfmesh/matrix.hpp"

#include "udfmesh/threads.hpp"

#include <algorithm>
#include <cmath>

#if defined(__AVX512F__)
#include <immintrin.h>
#define UDFMESH_AVX512 1
#endif

// Bit-determinism contract (relied on by tests and reproducibility mode):
// every C[i][j] is produced by exactly one worker as
//   - gemm_nt: W interleaved FMA partial chains over ascending k, a fixed
//     pairwise lane reduction, then scalar fma for the k tail;
//   - gemm_nn / gemm_tn: a single fma chain over ascending k.
// The schedule depends only on K, never on where the entry sits in a tile or
// which thread computes it.

namespace udfmesh {
namespace {

constexpr std::size_t kLanes = 8;

// Fixed pairwise tree over 8 lane partials.
inline double reduce8(const double* s) {
    const double a = s[0] + s[1];
    const double b = s[2] + s[3];
    const double c = s[4] + s[5];
    const double d = s[6] + s[7];
    return (a + b) + (c + d);
}

#ifdef UDFMESH_AVX512

template <int MR, int NR>
void nt_tile(std::size_t K, const double* const* arows, const double* const* brows, double* out) {
    __m512d acc[MR][NR];
    for (int r = 0; r < MR; ++r)
        for (int c = 0; c < NR; ++c) acc[r][c] = _mm512_setzero_pd();
    const std::size_t K8 = K & ~std::size_t(7);
    for (std::size_t k = 0; k < K8; k += 8) {
        __m512d va[MR];
        for (int r = 0; r < MR; ++r) va[r] = _mm512_loadu_pd(arows[r] + k);
        for (int c = 0; c < NR; ++c) {
            const __m512d vb = _mm512_loadu_pd(brows[c] + k);
            for (int r = 0; r < MR; ++r) acc[r][c] = _mm512_fmadd_pd(va[r], vb, acc[r][c]);
        }
    }
    alignas(64) double lanes[8];
    for (int r = 0; r < MR; ++r) {
        for (int c = 0; c < NR; ++c) {
            _mm512_storeu_pd(lanes, acc[r][c]);
            double s = reduce8(lanes);
            for (std::size_t k = K8; k < K; ++k) s = std::fma(arows[r][k], brows[c][k], s);
            out[r * NR + c] = s;
        }
    }
}

#else

template <int MR, int NR>
void nt_tile(std::size_t K, const double* const* arows, const double* const* brows, double* out) {
    const std::size_t K8 = K & ~std::size_t(7);
    for (int r = 0; r < MR; ++r) {
        for (int c = 0; c < NR; ++c) {
            double lanes[kLanes] = {0, 0, 0, 0, 0, 0, 0, 0};
            const double* a = arows[r];
            const double* b = brows[c];
            for (std::size_t k = 0; k < K8; k += 8)
                for (std::size_t l = 0; l < kLanes; ++l)
                    lanes[l] = std::fma(a[k + l], b[k + l], lanes[l]);
            double s = reduce8(lanes);
            for (std::size_t k = K8; k < K; ++k) s = std::fma(a[k], b[k], s);
            out[r * NR + c] = s;
        }
    }
}

#endif

template <int MR>
void nt_rows(std::size_t N, std::size_t K, const double* const* arows,
             const double* B, std::size_t ldb, double* const* crows, bool accumulate) {
    double out[MR * 8];
    std::size_t j = 0;
    for (; j + 8 <= N; j += 8) {
        const double* brows[8];
        for (int c = 0; c < 8; ++c) brows[c] = B + (j + c) * ldb;
        nt_tile<MR, 8>(K, arows, brows, out);
        for (int r = 0; r < MR; ++r)
            for (int c = 0; c < 8; ++c) {
                double v = out[r * 8 + c];
                if (accumulate) v += crows[r][j + c];
                crows[r][j + c] = v;
            }
    }
    for (; j < N; ++j) {
        const double* brow = B + j * ldb;
        nt_tile<MR, 1>(K, arows, &brow, out);
        for (int r = 0; r < MR; ++r) {
            double v = out[r];
            if (accumulate) v += crows[r][j];
            crows[r][j] = v;
        }
    }
}

// axpy-style kernel shared by gemm_nn and gemm_tn. The A scalar for output
// row i at step k sits at A[k * sk + i * si].
#ifdef UDFMESH_AVX512

template <int MR>
void axpy_rows(std::size_t N, std::size_t K, const double* A, std::size_t sk, std::size_t si,
               const double* B, std::size_t ldb, double* const* crows, bool accumulate) {
    std::size_t j = 0;
    for (; j + 16 <= N; j += 16) {
        __m512d acc[MR][2];
        for (int r = 0; r < MR; ++r) {
            if (accumulate) {
                acc[r][0] = _mm512_loadu_pd(crows[r] + j);
                acc[r][1] = _mm512_loadu_pd(crows[r] + j + 8);
            } else {
                acc[r][0] = _mm512_setzero_pd();
                acc[r][1] = _mm512_setzero_pd();
            }
        }
        for (std::size_t k = 0; k < K; ++k) {
            const __m512d b0 = _mm512_loadu_pd(B + k * ldb + j);
            const __m512d b1 = _mm512_loadu_pd(B + k * ldb + j + 8);
            for (int r = 0; r < MR; ++r) {
                const __m512d va = _mm512_set1_pd(A[k * sk + r * si]);
                acc[r][0] = _mm512_fmadd_pd(va, b0, acc[r][0]);
                acc[r][1] = _mm512_fmadd_pd(va, b1, acc[r][1]);
            }
        }
        for (int r = 0; r < MR; ++r) {
            _mm512_storeu_pd(crows[r] + j, acc[r][0]);
            _mm512_storeu_pd(crows[r] + j + 8, acc[r][1]);
        }
    }
    for (; j < N; ++j) {
        for (int r = 0; r < MR; ++r) {
            double s = accumulate ? crows[r][j] : 0.0;
            for (std::size_t k = 0; k < K; ++k) s = std::fma(A[k * sk + r * si], B[k * ldb + j], s);
            crows[r][j] = s;
        }
    }
}

#else

template <int MR>
void axpy_rows(std::size_t N, std::size_t K, const double* A, std::size_t sk, std::size_t si,
               const double* B, std::size_t ldb, double* const* crows, bool accumulate) {
    for (std::size_t j = 0; j < N; ++j) {
        for (int r = 0; r < MR; ++r) {
            double s = accumulate ? crows[r][j] : 0.0;
            for (std::size_t k = 0; k < K; ++k) s = std::fma(A[k * sk + r * si], B[k * ldb + j], s);
            crows[r][j] = s;
        }
    }
}

#endif

void axpy_range(std::size_t i0, std::size_t i1, std::size_t N, std::size_t K,
                const double* A, std::size_t sk, std::size_t si,
                const double* B, std::size_t ldb, double* C, std::size_t ldc, bool accumulate) {
    std::size_t i = i0;
    for (; i + 4 <= i1; i += 4) {
        double* crows[4] = {C + i * ldc, C + (i + 1) * ldc, C + (i + 2) * ldc, C + (i + 3) * ldc};
        axpy_rows<4>(N, K, A + i * si, sk, si, B, ldb, crows, accumulate);
    }
    for (; i < i1; ++i) {
        double* crow = C + i * ldc;
        axpy_rows<1>(N, K, A + i * si, sk, si, B, ldb, &crow, accumulate);
    }
}

} // namespace

void gemm_nt(std::size_t M, std::size_t N, std::size_t K,
             const double* A, std::size_t lda,
             const double* B, std::size_t ldb,
             double* C, std::size_t ldc,
             bool accumulate, int threads) {
    parallel_for(M, threads, [&](std::size_t i0, std::size_t i1) {
        std::size_t i = i0;
        for (; i + 3 <= i1; i += 3) {
            const double* arows[3] = {A + i * lda, A + (i + 1) * lda, A + (i + 2) * lda};
            double* crows[3] = {C + i * ldc, C + (i + 1) * ldc, C + (i + 2) * ldc};
            nt_rows<3>(N, K, arows, B, ldb, crows, accumulate);
        }
        for (; i < i1; ++i) {
            const double* arow = A + i * lda;
            double* crow = C + i * ldc;
            nt_rows<1>(N, K, &arow, B, ldb, &crow, accumulate);
        }
    });
}

void gemm_nn(std::size_t M, std::size_t N, std::size_t K,
             const double* A, std::size_t lda,
             const double* B, std::size_t ldb,
             double* C, std::size_t ldc,
             bool accumulate, int threads) {
    parallel_for(M, threads, [&](std::size_t i0, std::size_t i1) {
        axpy_range(i0, i1, N, K, A, /*sk=*/1, /*si=*/lda, B, ldb, C, ldc, accumulate);
    });
}

void gemm_tn(std::size_t M, std::size_t N, std::size_t K,
             const double* A, std::size_t lda,
             const double* B, std::size_t ldb,
             double* C, std::size_t ldc,
             bool accumulate, int threads) {
    parallel_for(M, threads, [&](std::size_t i0, std::size_t i1) {
        axpy_range(i0, i1, N, K, A, /*sk=*/lda, /*si=*/1, B, ldb, C, ldc, accumulate);
    });
}

} // namespace udfmesh
