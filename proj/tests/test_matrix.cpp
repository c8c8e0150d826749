#include "udfmesh/matrix.hpp"

#include "udfmesh/rng.hpp"
#include "udfmesh/threads.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace udfmesh;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Matrix m(r, c);
    Rng rng(seed);
    for (double& v : m.a) v = rng.next_range(-1.0, 1.0);
    return m;
}

Matrix naive_nt(const Matrix& A, const Matrix& B) {
    Matrix C(A.rows, B.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < B.rows; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < A.cols; ++k) s += A.at(i, k) * B.at(j, k);
            C.at(i, j) = s;
        }
    return C;
}

} // namespace

TEST_CASE("gemm_nt matches a naive reference") {
    for (auto [m, n, k] : {std::array<std::size_t, 3>{7, 5, 9}, {33, 17, 41}, {64, 128, 96}}) {
        const Matrix A = random_matrix(m, k, 1);
        const Matrix B = random_matrix(n, k, 2);
        Matrix C(m, n);
        gemm_nt(m, n, k, A.a.data(), k, B.a.data(), k, C.a.data(), n, false, 1);
        const Matrix R = naive_nt(A, B);
        for (std::size_t i = 0; i < C.a.size(); ++i) CHECK(C.a[i] == doctest::Approx(R.a[i]).epsilon(1e-12));
    }
}

TEST_CASE("gemm_nn and gemm_tn match naive references") {
    const std::size_t m = 21, n = 34, k = 27;
    const Matrix A = random_matrix(m, k, 3);
    const Matrix B = random_matrix(k, n, 4);
    Matrix C(m, n);
    gemm_nn(m, n, k, A.a.data(), k, B.a.data(), n, C.a.data(), n, false, 1);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t kk = 0; kk < k; ++kk) s += A.at(i, kk) * B.at(kk, j);
            CHECK(C.at(i, j) == doctest::Approx(s).epsilon(1e-12));
        }

    const Matrix At = random_matrix(k, m, 5); // stored k x m
    Matrix D(m, n);
    D.a.assign(D.a.size(), 0.5);
    gemm_tn(m, n, k, At.a.data(), m, B.a.data(), n, D.a.data(), n, true, 1);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.5;
            for (std::size_t kk = 0; kk < k; ++kk) s += At.at(kk, i) * B.at(kk, j);
            CHECK(D.at(i, j) == doctest::Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("gemm results are bit-identical across thread counts and row order") {
    const std::size_t m = 101, n = 67, k = 203; // awkward sizes hit the edge kernels
    const Matrix A = random_matrix(m, k, 7);
    const Matrix B = random_matrix(n, k, 8);

    Matrix C1(m, n), C4(m, n);
    gemm_nt(m, n, k, A.a.data(), k, B.a.data(), k, C1.a.data(), n, false, 1);
    gemm_nt(m, n, k, A.a.data(), k, B.a.data(), k, C4.a.data(), n, false, 4);
    CHECK(C1.a == C4.a);

    // permuting input rows permutes output rows with identical bits
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(99);
    rng.shuffle(perm.data(), perm.size());
    Matrix Ap(m, k);
    for (std::size_t i = 0; i < m; ++i)
        std::copy(A.row(perm[i]), A.row(perm[i]) + k, Ap.row(i));
    Matrix Cp(m, n);
    gemm_nt(m, n, k, Ap.a.data(), k, B.a.data(), k, Cp.a.data(), n, false, 3);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) CHECK(Cp.at(i, j) == C1.at(perm[i], j));

    const Matrix Bk = random_matrix(k, n, 11);
    Matrix D1(m, n), D2(m, n);
    gemm_nn(m, n, k, A.a.data(), k, Bk.a.data(), n, D1.a.data(), n, false, 1);
    gemm_nn(m, n, k, A.a.data(), k, Bk.a.data(), n, D2.a.data(), n, false, 4);
    CHECK(D1.a == D2.a);
}
