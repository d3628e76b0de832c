#pragma once

#include <cstddef>
#include <functional>

namespace oled {

// Row-major matrix kernels behind the conv/dense layers. Accumulation order
// inside every dot product is fixed (ascending k), so results are
// reproducible run to run.

/// C[m x n] = A[m x k] * B[k x n], overwriting C (accumulate=false) or
/// adding into it.
void gemm_nn(const float* A, const float* B, float* C, int m, int k, int n, bool accumulate);

/// C[m x n] = A^T * B with A stored [k x m], B stored [k x n].
void gemm_tn(const float* A, const float* B, float* C, int m, int k, int n, bool accumulate);

/// C[m x n] = A * B^T with A stored [m x k], B stored [n x k].
void gemm_nt(const float* A, const float* B, float* C, int m, int k, int n, bool accumulate);

/// Unfold one C x H x W image into a [C*k*k x outH*outW] patch matrix.
/// Out-of-bounds taps (zero padding) contribute zeros.
void im2col(const float* img, int C, int H, int W, int k, int stride, int pad,
            float* col, int out_h, int out_w);

/// Adjoint of im2col: scatter-add a patch matrix back into the C x H x W
/// image. The destination must be zeroed by the caller.
void col2im_add(const float* col, int C, int H, int W, int k, int stride, int pad,
                float* img, int out_h, int out_w);

/// Number of worker threads for per-sample parallel evaluation. Reads
/// OLED_THREADS once; defaults to 1, which keeps every code path strictly
/// sequential.
int eval_threads();

/// Runs fn(begin, end) over [0, n) split into contiguous chunks, one chunk
/// per thread. Each index is processed by exactly one invocation, so writes
/// to per-index slots are race-free and results match the sequential order.
void parallel_for_chunks(int n, int threads, const std::function<void(int, int)>& fn);

} // namespace oled
