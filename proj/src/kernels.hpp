// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense loops shared by the convolution and affine operations. Loop nesting is
// fixed so accumulation order (and therefore every result) is reproducible.

#pragma once

#include <cstdint>

#include "scarf/tensor.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {
namespace kernels {

using Index = std::int64_t;

// C[M,N] (+)= A[M,K] * B[K,N]
inline void gemm_nn(Index M, Index N, Index K, const Real* A, const Real* B, Real* C, bool accumulate) {
    for (Index m = 0; m < M; ++m) {
        Real* c = C + m * N;
        if (!accumulate) {
            for (Index n = 0; n < N; ++n) c[n] = Real(0);
        }
        for (Index k = 0; k < K; ++k) {
            const Real a = A[m * K + k];
            const Real* b = B + k * N;
            for (Index n = 0; n < N; ++n) c[n] += a * b[n];
        }
    }
}

inline Real dot(const Real* a, const Real* b, Index n) {
    Real acc[8] = {};
    Index i = 0;
    for (; i + 8 <= n; i += 8) {
        for (int j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
    }
    Real s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

// C[M,N] += A[M,K] * B[N,K]^T
inline void gemm_nt_acc(Index M, Index N, Index K, const Real* A, const Real* B, Real* C) {
    for (Index m = 0; m < M; ++m) {
        for (Index n = 0; n < N; ++n) C[m * N + n] += dot(A + m * K, B + n * K, K);
    }
}

// C[M,N] += A[K,M]^T * B[K,N]
inline void gemm_tn_acc(Index M, Index N, Index K, const Real* A, const Real* B, Real* C) {
    for (Index k = 0; k < K; ++k) {
        const Real* b = B + k * N;
        for (Index m = 0; m < M; ++m) {
            const Real a = A[k * M + m];
            Real* c = C + m * N;
            for (Index n = 0; n < N; ++n) c[n] += a * b[n];
        }
    }
}

}  // namespace kernels
}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
