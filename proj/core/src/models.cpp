#include "oled/models.hpp"

#include <memory>
#include <string>

namespace oled {

namespace {

int down2(int extent) { return (extent + 2 - 3) / 2 + 1; } // 3x3, stride 2, pad 1

/// Output padding that makes a stride-2 3x3 tconv land exactly on `target`.
int up2_out_pad(int in, int target, const std::string& where) {
    const int base = (in - 1) * 2 - 2 + 3;
    const int op = target - base;
    if (op < 0 || op > 1)
        throw ConfigError(where + ": cannot upsample " + std::to_string(in) + " -> " +
                          std::to_string(target) + " with a stride-2 transposed conv");
    return op;
}

} // namespace

LayerStack build_mask_generator(const MaskGeneratorConfig& cfg, Rng& rng) {
    if (cfg.enc_channels.empty() || cfg.dec_channels.size() + 1 != cfg.enc_channels.size())
        throw ConfigError("mask generator needs one decoder stage per encoder stage");

    LayerStack m;
    m.set_input_shape({cfg.in_ch, cfg.height, cfg.width});

    std::vector<int> hs{cfg.height}, ws{cfg.width};
    int ch = cfg.in_ch;
    for (std::size_t i = 0; i < cfg.enc_channels.size(); ++i) {
        const std::string tag = "enc" + std::to_string(i + 1);
        m.add(std::make_unique<Conv2d>(tag + "_conv", ch, cfg.enc_channels[i], 3, 2, 1));
        m.add(std::make_unique<BatchNorm2d>(tag + "_bn", cfg.enc_channels[i], cfg.bn_eps,
                                            cfg.bn_momentum));
        m.add(std::make_unique<LeakyReLU>(tag + "_act", cfg.leaky_slope));
        ch = cfg.enc_channels[i];
        hs.push_back(down2(hs.back()));
        ws.push_back(down2(ws.back()));
    }

    for (std::size_t i = 0; i < cfg.dec_channels.size(); ++i) {
        const std::string tag = "dec" + std::to_string(i + 1);
        const std::size_t level = hs.size() - 1 - i;
        const int oph = up2_out_pad(hs[level], hs[level - 1], tag);
        const int opw = up2_out_pad(ws[level], ws[level - 1], tag);
        if (oph != opw) throw ConfigError(tag + ": anisotropic output padding unsupported");
        m.add(std::make_unique<TransposedConv2d>(tag + "_tconv", ch, cfg.dec_channels[i], 3, 2, 1,
                                                 oph));
        m.add(std::make_unique<BatchNorm2d>(tag + "_bn", cfg.dec_channels[i], cfg.bn_eps,
                                            cfg.bn_momentum));
        m.add(std::make_unique<LeakyReLU>(tag + "_act", cfg.leaky_slope));
        ch = cfg.dec_channels[i];
    }
    const int op = up2_out_pad(hs[1], hs[0], "map");
    m.add(std::make_unique<TransposedConv2d>("map_tconv", ch, 1, 3, 2, 1, op));
    m.add(std::make_unique<ReLU>("map_relu"));
    m.init(rng);
    return m;
}

LayerStack build_reconstructor(const ReconstructorConfig& cfg, Rng& rng) {
    if (cfg.enc_channels.empty() || cfg.dec_channels.size() + 1 != cfg.enc_channels.size())
        throw ConfigError("reconstructor needs one decoder stage per encoder stage");
    if (cfg.bottleneck < 1) throw ConfigError("reconstructor bottleneck must be positive");

    LayerStack r;
    r.set_input_shape({cfg.in_ch, cfg.height, cfg.width});

    std::vector<int> hs{cfg.height}, ws{cfg.width};
    int ch = cfg.in_ch;
    for (std::size_t i = 0; i < cfg.enc_channels.size(); ++i) {
        const std::string tag = "enc" + std::to_string(i + 1);
        r.add(std::make_unique<Conv2d>(tag + "_conv", ch, cfg.enc_channels[i], 3, 2, 1));
        r.add(std::make_unique<BatchNorm2d>(tag + "_bn", cfg.enc_channels[i], cfg.bn_eps,
                                            cfg.bn_momentum));
        r.add(std::make_unique<LeakyReLU>(tag + "_act", cfg.leaky_slope));
        ch = cfg.enc_channels[i];
        hs.push_back(down2(hs.back()));
        ws.push_back(down2(ws.back()));
    }

    const int flat = ch * hs.back() * ws.back();
    r.add(std::make_unique<Reshape>("flatten", std::vector<int>{flat}));
    r.add(std::make_unique<Dense>("fc_enc", flat, cfg.bottleneck));
    r.add(std::make_unique<LeakyReLU>("fc_act", cfg.leaky_slope));
    r.add(std::make_unique<Dense>("fc_dec", cfg.bottleneck, flat));
    r.add(std::make_unique<Reshape>("unflatten", std::vector<int>{ch, hs.back(), ws.back()}));

    for (std::size_t i = 0; i < cfg.dec_channels.size(); ++i) {
        const std::string tag = "dec" + std::to_string(i + 1);
        const std::size_t level = hs.size() - 1 - i;
        const int oph = up2_out_pad(hs[level], hs[level - 1], tag);
        const int opw = up2_out_pad(ws[level], ws[level - 1], tag);
        if (oph != opw) throw ConfigError(tag + ": anisotropic output padding unsupported");
        r.add(std::make_unique<TransposedConv2d>(tag + "_tconv", ch, cfg.dec_channels[i], 3, 2, 1,
                                                 oph));
        r.add(std::make_unique<BatchNorm2d>(tag + "_bn", cfg.dec_channels[i], cfg.bn_eps,
                                            cfg.bn_momentum));
        r.add(std::make_unique<LeakyReLU>(tag + "_act", cfg.leaky_slope));
        ch = cfg.dec_channels[i];
    }
    const int op = up2_out_pad(hs[1], hs[0], "out");
    r.add(std::make_unique<TransposedConv2d>("out_tconv", ch, cfg.in_ch, 3, 2, 1, op));
    r.add(std::make_unique<Conv2d>("out_conv", cfg.in_ch, cfg.in_ch, 3, 1, 1));
    r.add(std::make_unique<Clip>("out_clip", cfg.clip_lo, cfg.clip_hi));
    r.init(rng);
    return r;
}

Tensor reconstruct(LayerStack& reconstructor, const Tensor& x, Mode mode) {
    return reconstructor.forward(x, mode, nullptr);
}

std::vector<float> extract_region(const Tensor& image, const Tensor& mask_image) {
    if (image.rank() != 3 || mask_image.rank() != 3 || mask_image.shape[0] != 1)
        throw ShapeError("extract_region wants C x H x W image and 1 x H x W mask");
    if (image.shape[1] != mask_image.shape[1] || image.shape[2] != mask_image.shape[2])
        throw ShapeError("extract_region: spatial shape mismatch");
    const int C = image.shape[0];
    const int plane = image.shape[1] * image.shape[2];
    std::vector<float> region;
    for (int c = 0; c < C; ++c) {
        const float* src = image.ptr() + static_cast<std::size_t>(c) * plane;
        const float* m = mask_image.ptr();
        for (int i = 0; i < plane; ++i)
            if (m[i] == 0.0f) region.push_back(src[i]);
    }
    return region;
}

std::vector<std::vector<float>> extract_regions(const Tensor& batch, const Tensor& masks) {
    if (batch.rank() != 4 || masks.rank() != 4)
        throw ShapeError("extract_regions wants rank-4 batches");
    const int N = batch.shape[0], C = batch.shape[1];
    const int plane = batch.shape[2] * batch.shape[3];
    std::vector<std::vector<float>> out(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        const float* m = masks.ptr() + static_cast<std::size_t>(n) * plane;
        std::vector<float>& region = out[static_cast<std::size_t>(n)];
        for (int c = 0; c < C; ++c) {
            const float* src = batch.ptr() + (static_cast<std::size_t>(n) * C + c) * plane;
            for (int i = 0; i < plane; ++i)
                if (m[i] == 0.0f) region.push_back(src[i]);
        }
    }
    return out;
}

} // namespace oled
