#include "oled/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <thread>
#include <vector>

namespace oled {

void gemm_nn(const float* A, const float* B, float* C, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(C, 0, sizeof(float) * static_cast<std::size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
        const float* a_row = A + static_cast<std::size_t>(i) * k;
        float* c_row = C + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const float a = a_row[p];
            if (a == 0.0f) continue;
            const float* b_row = B + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) c_row[j] += a * b_row[j];
        }
    }
}

void gemm_tn(const float* A, const float* B, float* C, int m, int k, int n, bool accumulate) {
    if (!accumulate) std::memset(C, 0, sizeof(float) * static_cast<std::size_t>(m) * n);
    // A is [k x m]; walk it row-wise so the inner loop stays contiguous.
    for (int p = 0; p < k; ++p) {
        const float* a_row = A + static_cast<std::size_t>(p) * m;
        const float* b_row = B + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const float a = a_row[i];
            if (a == 0.0f) continue;
            float* c_row = C + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) c_row[j] += a * b_row[j];
        }
    }
}

void gemm_nt(const float* A, const float* B, float* C, int m, int k, int n, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const float* a_row = A + static_cast<std::size_t>(i) * k;
        float* c_row = C + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const float* b_row = B + static_cast<std::size_t>(j) * k;
            float acc = 0.0f;
            for (int p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
            if (accumulate)
                c_row[j] += acc;
            else
                c_row[j] = acc;
        }
    }
}

void im2col(const float* img, int C, int H, int W, int k, int stride, int pad,
            float* col, int out_h, int out_w) {
    const int cols = out_h * out_w;
    for (int c = 0; c < C; ++c) {
        const float* plane = img + static_cast<std::size_t>(c) * H * W;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * cols;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    float* dst = row + static_cast<std::size_t>(oy) * out_w;
                    if (iy < 0 || iy >= H) {
                        std::memset(dst, 0, sizeof(float) * static_cast<std::size_t>(out_w));
                        continue;
                    }
                    const float* src = plane + static_cast<std::size_t>(iy) * W;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[ox] = (ix >= 0 && ix < W) ? src[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im_add(const float* col, int C, int H, int W, int k, int stride, int pad,
                float* img, int out_h, int out_w) {
    const int cols = out_h * out_w;
    for (int c = 0; c < C; ++c) {
        float* plane = img + static_cast<std::size_t>(c) * H * W;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * cols;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    const float* src = row + static_cast<std::size_t>(oy) * out_w;
                    float* dst = plane + static_cast<std::size_t>(iy) * W;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < W) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

int eval_threads() {
    static const int n = [] {
        const char* env = std::getenv("OLED_THREADS");
        if (!env) return 1;
        const long v = std::strtol(env, nullptr, 10);
        if (v < 1) return 1;
        const long hw = static_cast<long>(std::thread::hardware_concurrency());
        return static_cast<int>(std::min(v, std::max(hw, 1L)));
    }();
    return n;
}

void parallel_for_chunks(int n, int threads, const std::function<void(int, int)>& fn) {
    if (n <= 0) return;
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        fn(0, n);
        return;
    }
    const int chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) {
        const int b = t * chunk;
        const int e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back(fn, b, e);
    }
    fn(0, std::min(n, chunk));
    for (auto& th : pool) th.join();
}

} // namespace oled
