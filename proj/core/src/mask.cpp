#include "oled/mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace oled {

namespace {

void check_activation(const Tensor& a) {
    if (a.rank() != 4 || a.shape[1] != 1)
        throw ShapeError("activation map must be N x 1 x H x W, got " +
                         Tensor::shape_str(a.shape));
}

} // namespace

int masked_count(const ThresholdConfig& cfg, int pixels) {
    if (cfg.keep_fraction <= 0.0 || cfg.keep_fraction > 1.0)
        throw ConfigError("keep fraction t must lie in (0,1], got " +
                          std::to_string(cfg.keep_fraction));
    const int k = static_cast<int>(std::ceil((1.0 - cfg.keep_fraction) * pixels));
    return std::min(k, pixels);
}

std::vector<float> kth_largest(const Tensor& activation, int k) {
    check_activation(activation);
    const int N = activation.shape[0];
    const int pixels = activation.shape[2] * activation.shape[3];
    std::vector<float> s(static_cast<std::size_t>(N),
                         std::numeric_limits<float>::infinity());
    if (k <= 0) return s;
    std::vector<float> buf(static_cast<std::size_t>(pixels));
    for (int n = 0; n < N; ++n) {
        const float* a = activation.ptr() + static_cast<std::size_t>(n) * pixels;
        std::copy(a, a + pixels, buf.begin());
        std::nth_element(buf.begin(), buf.begin() + (k - 1), buf.end(), std::greater<float>());
        s[static_cast<std::size_t>(n)] = buf[static_cast<std::size_t>(k - 1)];
    }
    return s;
}

Tensor threshold(const Tensor& activation, const ThresholdConfig& cfg) {
    check_activation(activation);
    require_finite(activation, "threshold activation");
    const int N = activation.shape[0];
    const int pixels = activation.shape[2] * activation.shape[3];
    const int k = masked_count(cfg, pixels);

    Tensor mask = Tensor::full(activation.shape, 1.0f);
    if (k == 0) return mask;

    std::vector<int> order(static_cast<std::size_t>(pixels));
    for (int n = 0; n < N; ++n) {
        const float* a = activation.ptr() + static_cast<std::size_t>(n) * pixels;
        float* m = mask.ptr() + static_cast<std::size_t>(n) * pixels;
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [a](int lhs, int rhs) {
            if (a[lhs] != a[rhs]) return a[lhs] > a[rhs];
            return lhs < rhs;
        });
        for (int i = 0; i < k; ++i) m[order[static_cast<std::size_t>(i)]] = 0.0f;
    }
    return mask;
}

Tensor threshold_soft(const Tensor& activation, const std::vector<float>& s,
                      const ThresholdConfig& cfg) {
    check_activation(activation);
    if (cfg.eps <= 0.0f) throw ConfigError("threshold eps must be positive");
    const int N = activation.shape[0];
    const int pixels = activation.shape[2] * activation.shape[3];
    if (s.size() != static_cast<std::size_t>(N))
        throw ShapeError("threshold_soft: one s per image required");

    Tensor out(activation.shape);
    for (int n = 0; n < N; ++n) {
        const float* a = activation.ptr() + static_cast<std::size_t>(n) * pixels;
        float* o = out.ptr() + static_cast<std::size_t>(n) * pixels;
        const float sn = s[static_cast<std::size_t>(n)];
        for (int i = 0; i < pixels; ++i) {
            const float u = -std::max(a[i], 0.0f) + sn;
            const float f = u / (u + cfg.eps);
            o[i] = f < 0.0f ? 0.0f : (f > 1.0f ? 1.0f : f);
        }
    }
    return out;
}

Tensor apply_mask(const Tensor& x, const Tensor& mask) {
    if (x.rank() != 4) throw ShapeError("apply_mask: image batch must be rank 4");
    check_activation(mask);
    if (mask.shape[0] != x.shape[0] || mask.shape[2] != x.shape[2] ||
        mask.shape[3] != x.shape[3])
        throw ShapeError("apply_mask: mask " + Tensor::shape_str(mask.shape) +
                         " does not match images " + Tensor::shape_str(x.shape));
    const int N = x.shape[0], C = x.shape[1];
    const int plane = x.shape[2] * x.shape[3];
    Tensor xm(x.shape);
    for (int n = 0; n < N; ++n) {
        const float* m = mask.ptr() + static_cast<std::size_t>(n) * plane;
        for (int c = 0; c < C; ++c) {
            const float* src = x.ptr() + (static_cast<std::size_t>(n) * C + c) * plane;
            float* dst = xm.ptr() + (static_cast<std::size_t>(n) * C + c) * plane;
            for (int i = 0; i < plane; ++i) dst[i] = src[i] * m[i];
        }
    }
    return xm;
}

Tensor mask_backward(const Tensor& grad_xm, const Tensor& x, const Tensor& activation,
                     const Tensor& mask, const ThresholdConfig& cfg) {
    if (!grad_xm.same_shape(x))
        throw ShapeError("mask_backward: grad_xm/x shape mismatch");
    check_activation(activation);
    if (!mask.same_shape(activation))
        throw ShapeError("mask_backward: mask/activation shape mismatch");
    const int N = x.shape[0], C = x.shape[1];
    const int plane = x.shape[2] * x.shape[3];
    const int k = masked_count(cfg, plane);

    Tensor grad_a(activation.shape);
    if (k == 0) return grad_a; // mask is constantly 1: no dependence on A

    // d(x_m)/d(mask) summed over channels
    for (int n = 0; n < N; ++n) {
        float* ga = grad_a.ptr() + static_cast<std::size_t>(n) * plane;
        for (int c = 0; c < C; ++c) {
            const float* g = grad_xm.ptr() + (static_cast<std::size_t>(n) * C + c) * plane;
            const float* xv = x.ptr() + (static_cast<std::size_t>(n) * C + c) * plane;
            for (int i = 0; i < plane; ++i) ga[i] += g[i] * xv[i];
        }
    }
    if (cfg.grad_mode == MaskGradMode::StraightThrough) return grad_a;
    if (cfg.grad_mode != MaskGradMode::PaperLiteral)
        throw ConfigError("unknown mask gradient mode");

    // Clamped continuous threshold, s per image held constant:
    //   f(A) = (-relu(A) + s) / (-relu(A) + s + eps)
    // df/dA = -eps / (u + eps)^2 inside [0,1]; zero where relu or the clamp
    // is flat.
    const std::vector<float> s = kth_largest(activation, k);
    for (int n = 0; n < N; ++n) {
        float* ga = grad_a.ptr() + static_cast<std::size_t>(n) * plane;
        const float* a = activation.ptr() + static_cast<std::size_t>(n) * plane;
        const float sn = s[static_cast<std::size_t>(n)];
        for (int i = 0; i < plane; ++i) {
            if (a[i] <= 0.0f) {
                ga[i] = 0.0f;
                continue;
            }
            const float u = -a[i] + sn;
            const float f = u / (u + cfg.eps);
            if (f < 0.0f || f > 1.0f) {
                ga[i] = 0.0f; // clamp is flat here
                continue;
            }
            const float denom = u + cfg.eps;
            ga[i] *= -cfg.eps / (denom * denom);
        }
    }
    return grad_a;
}

} // namespace oled
