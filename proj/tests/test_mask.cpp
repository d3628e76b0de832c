#include <doctest.h>

#include <cmath>
#include <cstring>

#include "oled/mask.hpp"
#include "oled/models.hpp"
#include "oled/rng.hpp"

using namespace oled;

namespace {

Tensor map1(std::vector<float> v, int h, int w) {
    return Tensor({1, 1, h, w}, std::move(v));
}

int count_zeros(const Tensor& mask) {
    int z = 0;
    for (float v : mask.data) {
        CHECK((v == 0.0f || v == 1.0f));
        z += (v == 0.0f);
    }
    return z;
}

} // namespace

TEST_CASE("hard threshold masks the top 1-t fraction") {
    ThresholdConfig cfg;
    cfg.keep_fraction = 0.75;
    Tensor a = map1({0.1f, 0.9f, 0.5f, 0.7f}, 2, 2);
    Tensor mask = threshold(a, cfg);
    CHECK(mask.data == std::vector<float>{1, 0, 1, 1});
}

TEST_CASE("t = 1 keeps everything") {
    ThresholdConfig cfg;
    cfg.keep_fraction = 1.0;
    Tensor a = map1({0.4f, 0.2f, 0.9f, 0.1f}, 2, 2);
    CHECK(count_zeros(threshold(a, cfg)) == 0);
}

TEST_CASE("ties break toward the smallest row-major index") {
    ThresholdConfig cfg;
    cfg.keep_fraction = 0.5;
    Tensor a = map1({0.3f, 0.3f, 0.3f, 0.3f}, 2, 2);
    Tensor mask = threshold(a, cfg);
    CHECK(mask.data == std::vector<float>{0, 0, 1, 1});
}

TEST_CASE("keep fraction outside (0,1] is a config error") {
    ThresholdConfig cfg;
    Tensor a = map1({0.1f, 0.2f, 0.3f, 0.4f}, 2, 2);
    cfg.keep_fraction = 0.0;
    CHECK_THROWS_AS(threshold(a, cfg), ConfigError);
    cfg.keep_fraction = 1.5;
    CHECK_THROWS_AS(threshold(a, cfg), ConfigError);
    cfg.keep_fraction = -0.2;
    CHECK_THROWS_AS(threshold(a, cfg), ConfigError);
}

TEST_CASE("continuous threshold reformulation") {
    ThresholdConfig cfg;
    cfg.eps = 1e-4f;

    SUBCASE("activation equal to s maps to zero") {
        Tensor a = map1({0.6f}, 1, 1);
        Tensor f = threshold_soft(a, {0.6f}, cfg);
        CHECK(f.data[0] == doctest::Approx(0.0f));
    }
    SUBCASE("zero activation with s much larger than eps maps near one") {
        Tensor a = map1({0.0f}, 1, 1);
        Tensor f = threshold_soft(a, {0.5f}, cfg);
        CHECK(f.data[0] == doctest::Approx(0.5f / (0.5f + 1e-4f)));
        CHECK(f.data[0] > 0.99f);
    }
    SUBCASE("activation just above s evaluates to -1 and clamps to zero") {
        const float s = 0.5f;
        Tensor a = map1({s + cfg.eps / 2.0f}, 1, 1);
        // raw value: (-eps/2) / (eps/2) = -1, clamped into [0,1]
        Tensor f = threshold_soft(a, {s}, cfg);
        CHECK(f.data[0] == 0.0f);
    }
}

TEST_CASE("apply_mask broadcasts one mask across channels") {
    SUBCASE("all-ones mask is the identity") {
        Tensor x({1, 2, 2, 2}, {0.1f, -0.2f, 0.3f, -0.4f, 0.5f, -0.6f, 0.7f, -0.8f});
        Tensor mask = Tensor::full({1, 1, 2, 2}, 1.0f);
        Tensor xm = apply_mask(x, mask);
        CHECK(std::memcmp(xm.ptr(), x.ptr(), sizeof(float) * x.numel()) == 0);
    }
    SUBCASE("all-zeros mask hits the color-range midpoint everywhere") {
        Tensor x({1, 2, 2, 2}, {0.1f, -0.2f, 0.3f, -0.4f, 0.5f, -0.6f, 0.7f, -0.8f});
        Tensor xm = apply_mask(x, Tensor::zeros({1, 1, 2, 2}));
        for (float v : xm.data) CHECK(v == 0.0f);
    }
    SUBCASE("per-pixel multiplication over all channels") {
        Tensor x({1, 3, 1, 2}, {0.5f, 0.9f, -0.2f, 0.8f, 1.0f, 0.7f});
        Tensor mask({1, 1, 1, 2}, {0.0f, 1.0f});
        Tensor xm = apply_mask(x, mask);
        CHECK(xm.data == std::vector<float>{0, 0.9f, 0, 0.8f, 0, 0.7f});
    }
    SUBCASE("spatial mismatch is rejected") {
        Tensor x({1, 1, 2, 2});
        CHECK_THROWS_AS(apply_mask(x, Tensor::zeros({1, 1, 3, 2})), ShapeError);
    }
}

TEST_CASE("mask_backward") {
    ThresholdConfig cfg;
    cfg.keep_fraction = 0.5; // k = 1 on a single pixel

    SUBCASE("zero upstream gradient gives zero activation gradient") {
        Tensor x({2, 3, 2, 2});
        Tensor a = Tensor::full({2, 1, 2, 2}, 0.3f);
        Tensor mask = threshold(a, cfg);
        Tensor g = mask_backward(Tensor::zeros(x.shape), x, a, mask, cfg);
        for (float v : g.data) CHECK(v == 0.0f);
    }
    SUBCASE("straight-through is the channel-sum of grad times x") {
        Tensor x({1, 1, 1, 1}, {2.0f});
        Tensor a({1, 1, 1, 1}, {0.7f});
        Tensor mask = threshold(a, cfg);
        Tensor g = mask_backward(Tensor({1, 1, 1, 1}, {3.0f}), x, a, mask, cfg);
        CHECK(g.data[0] == doctest::Approx(6.0f));
    }
    SUBCASE("paper-literal is zero in the clamp's flat region") {
        ThresholdConfig pl = cfg;
        pl.grad_mode = MaskGradMode::PaperLiteral;
        pl.eps = 1e-6f;
        // two pixels: the larger is masked (A > s would clamp; here A == s is
        // the masked one with k=2 on 2x2 -> s = second largest)
        pl.keep_fraction = 0.5;
        Tensor x({1, 1, 2, 2}, {1.0f, 1.0f, 1.0f, 1.0f});
        Tensor a({1, 1, 2, 2}, {0.9f, 0.8f, 0.1f, 0.05f}); // k=2, s=0.8
        Tensor mask = threshold(a, pl);
        Tensor up = Tensor::full(x.shape, 5.0f);
        Tensor g = mask_backward(up, x, a, mask, pl);
        // A=0.9 > s: raw soft value is outside [0,1] -> clamped flat -> 0
        CHECK(g.data[0] == 0.0f);
        // A=0.8 == s: boundary carries the -1/eps slope
        CHECK(g.data[1] < 0.0f);
    }
    SUBCASE("k = 0 short-circuits to a zero gradient") {
        ThresholdConfig keep_all = cfg;
        keep_all.keep_fraction = 1.0;
        Tensor x({1, 1, 2, 2}, {1, 2, 3, 4});
        Tensor a = Tensor::full({1, 1, 2, 2}, 0.5f);
        Tensor mask = threshold(a, keep_all);
        Tensor g = mask_backward(Tensor::full(x.shape, 3.0f), x, a, mask, keep_all);
        for (float v : g.data) CHECK(v == 0.0f);
    }
}

TEST_CASE("mask cardinality and invariances over random activation maps") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const int h = 4 + static_cast<int>(rng.index(8));
        const int w = 4 + static_cast<int>(rng.index(8));
        Tensor a({2, 1, h, w});
        for (float& v : a.data) v = rng.uniform(0.0f, 1.0f);

        for (double t : {0.5, 0.875, 1.0}) {
            ThresholdConfig cfg;
            cfg.keep_fraction = t;
            const int k = static_cast<int>(std::ceil((1.0 - t) * h * w));
            Tensor mask = threshold(a, cfg);
            for (int n = 0; n < 2; ++n) {
                int z = 0;
                for (int i = 0; i < h * w; ++i)
                    z += (mask.ptr()[n * h * w + i] == 0.0f);
                CHECK(z == k);
            }

            // strictly increasing transforms leave the mask unchanged
            Tensor a2(a.shape);
            for (std::int64_t i = 0; i < a.numel(); ++i)
                a2.data[i] = 2.0f * a.data[i] + 1.0f;
            Tensor a3(a.shape);
            for (std::int64_t i = 0; i < a.numel(); ++i)
                a3.data[i] = std::exp(a.data[i]);
            CHECK(std::memcmp(threshold(a2, cfg).ptr(), mask.ptr(),
                              sizeof(float) * mask.numel()) == 0);
            CHECK(std::memcmp(threshold(a3, cfg).ptr(), mask.ptr(),
                              sizeof(float) * mask.numel()) == 0);

            // unmasked pixels survive bit-exactly
            Tensor x({2, 3, h, w});
            for (float& v : x.data) v = rng.uniform(-1.0f, 1.0f);
            Tensor xm = apply_mask(x, mask);
            for (int n = 0; n < 2; ++n)
                for (int c = 0; c < 3; ++c)
                    for (int i = 0; i < h * w; ++i) {
                        const std::size_t off =
                            (static_cast<std::size_t>(n) * 3 + c) * h * w + i;
                        if (mask.ptr()[n * h * w + i] == 1.0f)
                            CHECK(xm.data[off] == x.data[off]);
                        else
                            CHECK(xm.data[off] == 0.0f);
                    }

            // re-thresholding the mask still yields exactly k zeros
            CHECK(count_zeros(threshold(mask, cfg)) == 2 * k);
        }
    }
}

TEST_CASE("mask generator produces non-negative maps of the right shape") {
    Rng rng(41);
    MaskGeneratorConfig cfg;
    cfg.in_ch = 1;
    cfg.height = 16;
    cfg.width = 16;
    cfg.enc_channels = {8, 16};
    cfg.dec_channels = {8};
    LayerStack gen = build_mask_generator(cfg, rng);

    Tensor x({2, 1, 16, 16});
    for (float& v : x.data) v = rng.uniform(-1.0f, 1.0f);
    Tensor a = gen.forward(x, Mode::Infer);
    CHECK(a.shape == std::vector<int>{2, 1, 16, 16});
    for (float v : a.data) CHECK(v >= 0.0f);

    Tensor a2 = gen.forward(x, Mode::Infer);
    CHECK(std::memcmp(a.ptr(), a2.ptr(), sizeof(float) * a.numel()) == 0);
}

TEST_CASE("with t = 1 the pipeline degrades to a plain autoencoder input") {
    Rng rng(42);
    MaskGeneratorConfig cfg;
    cfg.height = 8;
    cfg.width = 8;
    cfg.enc_channels = {4, 8};
    cfg.dec_channels = {4};
    LayerStack gen = build_mask_generator(cfg, rng);
    MaskModule mm{std::move(gen), {1.0, 1e-6f, MaskGradMode::StraightThrough}};

    Tensor x({3, 1, 8, 8});
    for (float& v : x.data) v = rng.uniform(-1.0f, 1.0f);
    Tensor xm = apply_mask(x, mm.masks(x));
    CHECK(std::memcmp(xm.ptr(), x.ptr(), sizeof(float) * x.numel()) == 0);
}
