#include <doctest.h>

#include "oled/adam.hpp"
#include "oled/models.hpp"
#include "oled/rng.hpp"

using namespace oled;

namespace {

ReconstructorConfig small_cfg(int side) {
    ReconstructorConfig cfg;
    cfg.in_ch = 1;
    cfg.height = side;
    cfg.width = side;
    cfg.enc_channels = {8, 16, 32};
    cfg.dec_channels = {16, 8};
    cfg.bottleneck = 32;
    return cfg;
}

} // namespace

TEST_CASE("reconstruction stays inside the clip range with matching shape") {
    Rng rng(50);
    LayerStack r = build_reconstructor(small_cfg(16), rng);

    for (int batch : {1, 7}) {
        Tensor x({batch, 1, 16, 16});
        for (float& v : x.data) v = rng.uniform(-4.0f, 4.0f); // even wild inputs
        Tensor y = reconstruct(r, x);
        CHECK(y.shape == x.shape);
        for (float v : y.data) {
            CHECK(v >= -1.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("reconstructor rejects mismatched input shapes") {
    Rng rng(51);
    LayerStack r = build_reconstructor(small_cfg(16), rng);
    Tensor bad({1, 1, 12, 16});
    CHECK_THROWS_AS(reconstruct(r, bad), ShapeError);
}

TEST_CASE("extract_region") {
    SUBCASE("all-ones mask gives an empty region") {
        Tensor img({1, 2, 2});
        Tensor mask = Tensor::full({1, 2, 2}, 1.0f);
        CHECK(extract_region(img, mask).empty());
    }
    SUBCASE("single masked pixel at the origin") {
        Tensor img({1, 2, 2}, {0.7f, 0.1f, 0.2f, 0.3f});
        Tensor mask({1, 2, 2}, {0.0f, 1.0f, 1.0f, 1.0f});
        const std::vector<float> region = extract_region(img, mask);
        REQUIRE(region.size() == 1);
        CHECK(region[0] == doctest::Approx(0.7f));
    }
    SUBCASE("image and reconstruction regions share the index set") {
        Rng rng(52);
        for (int trial = 0; trial < 20; ++trial) {
            Tensor x({3, 5, 5}), xhat({3, 5, 5});
            for (float& v : x.data) v = rng.uniform(-1.0f, 1.0f);
            for (float& v : xhat.data) v = rng.uniform(-1.0f, 1.0f);
            Tensor mask({1, 5, 5});
            for (float& v : mask.data) v = rng.uniform() < 0.3f ? 0.0f : 1.0f;
            const auto a = extract_region(x, mask);
            const auto b = extract_region(xhat, mask);
            CHECK(a.size() == b.size());
            int zeros = 0;
            for (float v : mask.data) zeros += (v == 0.0f);
            CHECK(static_cast<int>(a.size()) == zeros * 3);
        }
    }
}

TEST_CASE("overfitting a single image drives its reconstruction error down") {
    Rng rng(53);
    LayerStack r = build_reconstructor(small_cfg(16), rng);
    Adam opt({2e-3f, 0.5f, 0.9f, 1e-8f});

    Tensor single({1, 1, 16, 16});
    for (float& v : single.data) v = rng.uniform(-0.9f, 0.9f);
    Tensor batch({8, 1, 16, 16});
    for (int n = 0; n < 8; ++n)
        std::copy(single.data.begin(), single.data.end(),
                  batch.data.begin() + static_cast<std::ptrdiff_t>(n) * 256);

    double mse = 1e9;
    for (int step = 0; step < 400 && mse >= 0.01; ++step) {
        Tape tape;
        Tensor y = r.forward(batch, Mode::Train, &tape);
        Tensor g(y.shape);
        for (std::int64_t i = 0; i < y.numel(); ++i)
            g.data[i] = 2.0f * (y.data[i] - batch.data[i]) / static_cast<float>(y.numel());
        GradMap grads;
        r.backward(tape, g, grads);
        opt.step(r.parameters(), grads);

        Tensor yy = reconstruct(r, single);
        double acc = 0.0;
        for (std::int64_t i = 0; i < yy.numel(); ++i) {
            const double d = static_cast<double>(yy.data[i]) - single.data[i];
            acc += d * d;
        }
        mse = acc / static_cast<double>(yy.numel());
    }
    CHECK(mse < 0.01);
}
