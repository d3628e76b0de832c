#pragma once

#include <vector>

#include "oled/layers.hpp"
#include "oled/mask.hpp"
#include "oled/rng.hpp"

namespace oled {

/// Mask generator M: small convolutional autoencoder with a spatial
/// bottleneck, ending in a 1-channel ReLU activation map at input
/// resolution.
struct MaskGeneratorConfig {
    int in_ch = 1;
    int height = 32;
    int width = 32;
    std::vector<int> enc_channels{16, 32}; // stride-2 conv blocks (bn + leaky relu)
    std::vector<int> dec_channels{16};     // stride-2 tconv blocks before the 1-channel map
    float leaky_slope = 0.2f;
    float bn_eps = 1e-5f;
    float bn_momentum = 0.9f;
};

/// Reconstructor R: convolutional encoder-decoder with a dense bottleneck,
/// no pooling anywhere, output clipped to [-1,1].
struct ReconstructorConfig {
    int in_ch = 1;
    int height = 32;
    int width = 32;
    std::vector<int> enc_channels{32, 64, 128}; // stride-2 conv blocks (bn + leaky relu)
    int bottleneck = 128;                       // dense latent width
    std::vector<int> dec_channels{64, 32};      // tconv blocks; a final tconv emits in_ch
    float leaky_slope = 0.2f;
    float bn_eps = 1e-5f;
    float bn_momentum = 0.9f;
    float clip_lo = -1.0f;
    float clip_hi = 1.0f;
};

LayerStack build_mask_generator(const MaskGeneratorConfig& cfg, Rng& rng);
LayerStack build_reconstructor(const ReconstructorConfig& cfg, Rng& rng);

/// Mask Module MM: generator M plus threshold unit T.
struct MaskModule {
    LayerStack generator;
    ThresholdConfig threshold_cfg;

    /// Activation map A >= 0 of shape [N,1,H,W].
    Tensor activation_map(const Tensor& x, Mode mode, Tape* tape = nullptr) {
        return generator.forward(x, mode, tape);
    }

    /// Deterministic hard masks for a batch (infer mode).
    Tensor masks(const Tensor& x) {
        return threshold(activation_map(x, Mode::Infer), threshold_cfg);
    }
};

/// Reconstruction in the requested mode; thin wrapper that exists so callers
/// do not touch tape plumbing for plain inference.
Tensor reconstruct(LayerStack& reconstructor, const Tensor& x, Mode mode = Mode::Infer);

/// Values of one image at the mask's zero positions, channel by channel in
/// row-major order. Masked regions from an image and from its reconstruction
/// use the identical index set by construction.
std::vector<float> extract_region(const Tensor& image, const Tensor& mask_image);

/// Batch variant: per-sample regions from x (or a reconstruction) under
/// masks [N,1,H,W]; result[i] has k*C values.
std::vector<std::vector<float>> extract_regions(const Tensor& batch, const Tensor& masks);

} // namespace oled
