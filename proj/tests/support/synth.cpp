#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "oled/rng.hpp"

namespace fs = std::filesystem;

namespace oled::synth {

namespace {

struct Pt {
    float x, y;
};

using Path = std::vector<Pt>; // polyline in the unit square, y down

/// Catmull-Rom sample through control points, 8 segments per span.
Path smooth(const Path& ctrl) {
    if (ctrl.size() < 3) return ctrl;
    Path out;
    for (std::size_t i = 0; i + 1 < ctrl.size(); ++i) {
        const Pt p0 = ctrl[i == 0 ? 0 : i - 1];
        const Pt p1 = ctrl[i];
        const Pt p2 = ctrl[i + 1];
        const Pt p3 = ctrl[std::min(i + 2, ctrl.size() - 1)];
        for (int s = 0; s < 8; ++s) {
            const float t = static_cast<float>(s) / 8.0f;
            const float t2 = t * t, t3 = t2 * t;
            out.push_back({0.5f * ((2 * p1.x) + (-p0.x + p2.x) * t +
                                   (2 * p0.x - 5 * p1.x + 4 * p2.x - p3.x) * t2 +
                                   (-p0.x + 3 * p1.x - 3 * p2.x + p3.x) * t3),
                           0.5f * ((2 * p1.y) + (-p0.y + p2.y) * t +
                                   (2 * p0.y - 5 * p1.y + 4 * p2.y - p3.y) * t2 +
                                   (-p0.y + 3 * p1.y - 3 * p2.y + p3.y) * t3)});
        }
    }
    out.push_back(ctrl.back());
    return out;
}

Path ellipse(float cx, float cy, float rx, float ry, int n = 24) {
    Path p;
    for (int i = 0; i <= n; ++i) {
        const float a = 2.0f * 3.14159265f * static_cast<float>(i) / n;
        p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return p;
}

/// Digit skeletons as polylines in the unit square.
std::vector<Path> digit_paths(int digit) {
    switch (digit) {
        case 0:
            return {ellipse(0.5f, 0.5f, 0.26f, 0.38f)};
        case 1:
            return {smooth({{0.36f, 0.28f}, {0.52f, 0.12f}, {0.52f, 0.52f}, {0.52f, 0.9f}})};
        case 2:
            return {smooth({{0.28f, 0.3f},
                            {0.45f, 0.1f},
                            {0.7f, 0.24f},
                            {0.58f, 0.52f},
                            {0.28f, 0.88f}}),
                    {{0.28f, 0.88f}, {0.74f, 0.88f}}};
        case 3:
            return {smooth({{0.3f, 0.18f},
                            {0.55f, 0.1f},
                            {0.68f, 0.3f},
                            {0.48f, 0.48f},
                            {0.7f, 0.66f},
                            {0.52f, 0.9f},
                            {0.28f, 0.82f}})};
        case 4:
            return {{{0.62f, 0.1f}, {0.26f, 0.62f}, {0.78f, 0.62f}},
                    {{0.62f, 0.1f}, {0.62f, 0.9f}}};
        case 5:
            return {{{0.7f, 0.12f}, {0.32f, 0.12f}, {0.3f, 0.46f}},
                    smooth({{0.3f, 0.46f},
                            {0.6f, 0.42f},
                            {0.7f, 0.64f},
                            {0.54f, 0.88f},
                            {0.3f, 0.8f}})};
        case 6:
            return {smooth({{0.66f, 0.12f},
                            {0.42f, 0.3f},
                            {0.32f, 0.56f},
                            {0.38f, 0.8f},
                            {0.58f, 0.88f},
                            {0.68f, 0.7f},
                            {0.56f, 0.56f},
                            {0.36f, 0.6f}})};
        case 7:
            return {{{0.26f, 0.14f}, {0.74f, 0.14f}, {0.44f, 0.9f}}};
        case 8:
            return {ellipse(0.5f, 0.3f, 0.18f, 0.17f), ellipse(0.5f, 0.67f, 0.23f, 0.2f)};
        case 9:
            return {ellipse(0.47f, 0.32f, 0.19f, 0.18f),
                    smooth({{0.66f, 0.32f}, {0.64f, 0.6f}, {0.54f, 0.9f}})};
        default:
            throw ConfigError("digit must be 0..9");
    }
}

float seg_dist(float px, float py, Pt a, Pt b) {
    const float vx = b.x - a.x, vy = b.y - a.y;
    const float len2 = vx * vx + vy * vy;
    float t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0f;
    t = std::clamp(t, 0.0f, 1.0f);
    const float dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

void render_digit(std::uint8_t* out, int side, int digit, Rng& rng) {
    std::vector<Path> paths = digit_paths(digit);

    // jitter control points, then a random affine pose
    const float rot = rng.uniform(-0.22f, 0.22f);
    const float scale = rng.uniform(0.78f, 1.02f) * side;
    const float shear = rng.uniform(-0.12f, 0.12f);
    const float tx = rng.uniform(-1.6f, 1.6f) + side * 0.5f;
    const float ty = rng.uniform(-1.6f, 1.6f) + side * 0.5f;
    const float cr = std::cos(rot), sr = std::sin(rot);
    const float thick = rng.uniform(0.95f, 1.8f);

    for (Path& p : paths)
        for (Pt& q : p) {
            q.x += rng.uniform(-0.015f, 0.015f);
            q.y += rng.uniform(-0.015f, 0.015f);
            const float ux = (q.x - 0.5f) + shear * (q.y - 0.5f);
            const float uy = q.y - 0.5f;
            q.x = scale * (cr * ux - sr * uy) + tx;
            q.y = scale * (sr * ux + cr * uy) + ty;
        }

    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            float d = 1e9f;
            const float px = static_cast<float>(x) + 0.5f;
            const float py = static_cast<float>(y) + 0.5f;
            for (const Path& p : paths)
                for (std::size_t i = 0; i + 1 < p.size(); ++i)
                    d = std::min(d, seg_dist(px, py, p[i], p[i + 1]));
            const float v = 1.0f - (d - thick * 0.55f) / 1.1f; // soft stroke edge
            const float clamped = std::clamp(v, 0.0f, 1.0f);
            out[y * side + x] = static_cast<std::uint8_t>(std::lround(255.0f * clamped));
        }
}

} // namespace

RawDataset digits(int per_class, std::uint64_t seed) {
    RawDataset ds;
    ds.channels = 1;
    ds.height = 28;
    ds.width = 28;
    ds.pixels.resize(static_cast<std::size_t>(per_class) * 10 * 28 * 28);
    ds.labels.resize(static_cast<std::size_t>(per_class) * 10);

    // interleave classes so any prefix is class-balanced
    Rng rng(seed);
    std::size_t i = 0;
    for (int n = 0; n < per_class; ++n)
        for (int d = 0; d < 10; ++d, ++i) {
            ds.labels[i] = d;
            render_digit(ds.pixels.data() + i * 28 * 28, 28, d, rng);
        }
    return ds;
}

void write_idx_images(const std::string& path, const RawDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    auto be = [&](std::uint32_t v) {
        const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                                   static_cast<std::uint8_t>(v >> 16),
                                   static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    be(2051);
    be(static_cast<std::uint32_t>(data.count()));
    be(static_cast<std::uint32_t>(data.height));
    be(static_cast<std::uint32_t>(data.width));
    out.write(reinterpret_cast<const char*>(data.pixels.data()),
              static_cast<std::streamsize>(data.pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    auto be = [&](std::uint32_t v) {
        const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                                   static_cast<std::uint8_t>(v >> 16),
                                   static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    be(2049);
    be(static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) out.put(static_cast<char>(l));
}

void write_digit_idx_pair(const std::string& images_path, const std::string& labels_path,
                          int per_class, std::uint64_t seed) {
    const RawDataset ds = digits(per_class, seed);
    write_idx_images(images_path, ds);
    write_idx_labels(labels_path, ds.labels);
}

RawDataset cifar_like(int count, std::uint64_t seed) {
    RawDataset ds;
    ds.channels = 3;
    ds.height = 32;
    ds.width = 32;
    ds.pixels.resize(static_cast<std::size_t>(count) * 3072);
    ds.labels.resize(static_cast<std::size_t>(count));
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        const int cls = i % 10;
        ds.labels[static_cast<std::size_t>(i)] = cls;
        // class-specific hue gradient plus a textured square
        const float hue = static_cast<float>(cls) / 10.0f;
        const int sq = 6 + cls;
        const int sy = static_cast<int>(rng.index(32 - sq));
        const int sx = static_cast<int>(rng.index(32 - sq));
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) {
                    float v = 80.0f + 120.0f * hue + 40.0f * std::sin(0.3f * (y + 7 * c)) +
                              20.0f * std::cos(0.4f * x + hue * 6.0f);
                    if (y >= sy && y < sy + sq && x >= sx && x < sx + sq)
                        v += 60.0f + rng.uniform(-20.0f, 20.0f);
                    v += rng.uniform(-8.0f, 8.0f);
                    ds.pixels[((static_cast<std::size_t>(i) * 3 + c) * 32 + y) * 32 + x] =
                        static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
                }
    }
    return ds;
}

void write_cifar_batch(const std::string& path, const RawDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (int i = 0; i < data.count(); ++i) {
        out.put(static_cast<char>(data.labels[static_cast<std::size_t>(i)]));
        out.write(reinterpret_cast<const char*>(data.pixels.data() +
                                                static_cast<std::size_t>(i) * 3072),
                  3072);
    }
}

void write_ucsd_dir(const std::string& dir, int n_train, int n_test, std::uint64_t seed,
                    int height, int width) {
    fs::create_directories(dir + "/train");
    fs::create_directories(dir + "/test");
    Rng rng(seed);

    auto render_frame = [&](bool anomalous) {
        PgmImage img;
        img.height = height;
        img.width = width;
        img.pixels.resize(static_cast<std::size_t>(height) * width);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const float v = 90.0f + 25.0f * std::sin(0.05f * x) + 15.0f * std::cos(0.07f * y) +
                                rng.uniform(-6.0f, 6.0f);
                img.pixels[static_cast<std::size_t>(y) * width + x] =
                    static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
            }
        auto blob = [&](int cy, int cx, int ry, int rx, float bright) {
            for (int y = std::max(0, cy - ry); y < std::min(height, cy + ry); ++y)
                for (int x = std::max(0, cx - rx); x < std::min(width, cx + rx); ++x) {
                    const float dy = static_cast<float>(y - cy) / ry;
                    const float dx = static_cast<float>(x - cx) / rx;
                    if (dy * dy + dx * dx <= 1.0f) {
                        auto& px = img.pixels[static_cast<std::size_t>(y) * width + x];
                        px = static_cast<std::uint8_t>(
                            std::clamp(static_cast<float>(px) + bright, 0.0f, 255.0f));
                    }
                }
        };
        const int walkers = 2 + static_cast<int>(rng.index(3));
        for (int w = 0; w < walkers; ++w)
            blob(40 + static_cast<int>(rng.index(static_cast<std::size_t>(height - 80))),
                 20 + static_cast<int>(rng.index(static_cast<std::size_t>(width - 40))), 14, 6,
                 -55.0f);
        if (anomalous)
            blob(40 + static_cast<int>(rng.index(static_cast<std::size_t>(height - 80))),
                 30 + static_cast<int>(rng.index(static_cast<std::size_t>(width - 60))), 18, 22,
                 115.0f);
        return img;
    };

    char name[32];
    for (int i = 0; i < n_train; ++i) {
        std::snprintf(name, sizeof(name), "frame_%04d.pgm", i);
        write_pgm(dir + "/train/" + name, render_frame(false));
    }
    std::ofstream labels(dir + "/test_labels.txt");
    for (int i = 0; i < n_test; ++i) {
        const bool anomalous = (i % 3 == 1); // mixed, deterministic layout
        std::snprintf(name, sizeof(name), "frame_%04d.pgm", i);
        write_pgm(dir + "/test/" + name, render_frame(anomalous));
        labels << (anomalous ? 1 : 0) << "\n";
    }
}

} // namespace oled::synth
