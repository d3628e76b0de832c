#pragma once

#include <vector>

#include "oled/tensor.hpp"

namespace oled {

/// Backward path through the threshold unit. The forward pass is always the
/// hard top-k threshold; only the gradient surrogate differs.
enum class MaskGradMode { StraightThrough, PaperLiteral };

struct ThresholdConfig {
    double keep_fraction = 0.875; // t: fraction of pixels NOT masked, in (0,1]
    float eps = 1e-6f;            // paper-literal smoothing scalar
    MaskGradMode grad_mode = MaskGradMode::StraightThrough;
};

/// k = ceil((1-t) * pixels): how many pixels are zeroed per image.
int masked_count(const ThresholdConfig& cfg, int pixels);

/// Per-image k-th largest activation (the threshold scalar s). Ties share
/// the value; k = 0 yields +inf (nothing reaches the masked set).
std::vector<float> kth_largest(const Tensor& activation, int k);

/// Hard threshold: per image, the k largest activations (ties broken toward
/// the smallest row-major index) become 0, everything else 1.
/// activation is [N,1,H,W]; the mask has the same shape.
Tensor threshold(const Tensor& activation, const ThresholdConfig& cfg);

/// Continuous reformulation (max(A,0) * -1 + s) / (max(A,0) * -1 + s + eps),
/// clamped to [0,1]. Defines the paper-literal backward path; not used by
/// the hard forward.
Tensor threshold_soft(const Tensor& activation, const std::vector<float>& s,
                      const ThresholdConfig& cfg);

/// x_m = x * mask, the single-channel mask broadcast across channels.
/// x is [N,C,H,W], mask [N,1,H,W].
Tensor apply_mask(const Tensor& x, const Tensor& mask);

/// Gradient wrt the activation map given the gradient wrt the masked image.
/// The mask-value gradient at (i,j) is sum_c grad_xm * x. StraightThrough
/// passes it to A unchanged (identity surrogate); PaperLiteral routes it
/// through the clamped continuous threshold with s held constant. With k=0
/// the mask is constantly 1 and the gradient is exactly zero.
Tensor mask_backward(const Tensor& grad_xm, const Tensor& x, const Tensor& activation,
                     const Tensor& mask, const ThresholdConfig& cfg);

} // namespace oled
