#include "oled/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "oled/rng.hpp"

namespace fs = std::filesystem;

namespace oled {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

/// Gather selected images from raw 8-bit storage into a normalized tensor.
Tensor gather_normalized(const RawDataset& raw, const std::vector<int>& indices,
                         bool pad_28_to_32) {
    const bool pad = pad_28_to_32 && raw.height == 28 && raw.width == 28;
    const int H = pad ? 32 : raw.height;
    const int W = pad ? 32 : raw.width;
    const int C = raw.channels;
    const int off_h = pad ? 2 : 0, off_w = pad ? 2 : 0;
    const std::size_t per = static_cast<std::size_t>(C) * raw.height * raw.width;

    Tensor out = Tensor::full({static_cast<int>(indices.size()), C, H, W}, -1.0f);
    for (std::size_t n = 0; n < indices.size(); ++n) {
        const std::uint8_t* src = raw.pixels.data() + per * static_cast<std::size_t>(indices[n]);
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < raw.height; ++y) {
                float* dst = out.ptr() +
                             ((n * C + static_cast<std::size_t>(c)) * H + y + off_h) * W + off_w;
                const std::uint8_t* row =
                    src + (static_cast<std::size_t>(c) * raw.height + y) * raw.width;
                for (int x = 0; x < raw.width; ++x)
                    dst[x] = static_cast<float>(row[x]) / 127.5f - 1.0f;
            }
    }
    return out;
}

std::vector<std::string> sorted_pgm_files(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir + "' is not a directory");
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".pgm")
            files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .pgm frames in '" + dir + "'");
    return files;
}

} // namespace

std::uint64_t index_hash(const std::vector<int>& indices) {
    std::uint64_t h = 1469598103934665603ull;
    for (int v : indices)
        for (int b = 0; b < 4; ++b) {
            h ^= static_cast<std::uint64_t>((static_cast<std::uint32_t>(v) >> (8 * b)) & 0xff);
            h *= 1099511628211ull;
        }
    return h;
}

// ---- parsers ----

RawDataset parse_idx_images(const std::string& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 16) throw IoError(path + ": truncated IDX image header");
    const std::uint32_t magic = be32(bytes.data());
    if (magic != 2051)
        throw IoError(path + ": bad IDX image magic " + std::to_string(magic) +
                      " (expected 2051)");
    const std::uint32_t n = be32(bytes.data() + 4);
    const std::uint32_t rows = be32(bytes.data() + 8);
    const std::uint32_t cols = be32(bytes.data() + 12);
    const std::size_t need = 16 + static_cast<std::size_t>(n) * rows * cols;
    if (bytes.size() < need)
        throw IoError(path + ": payload shorter than header promises (" +
                      std::to_string(bytes.size()) + " < " + std::to_string(need) + " bytes)");
    RawDataset ds;
    ds.channels = 1;
    ds.height = static_cast<int>(rows);
    ds.width = static_cast<int>(cols);
    ds.pixels.assign(bytes.begin() + 16, bytes.begin() + static_cast<std::ptrdiff_t>(need));
    return ds;
}

std::vector<int> parse_idx_labels(const std::string& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 8) throw IoError(path + ": truncated IDX label header");
    const std::uint32_t magic = be32(bytes.data());
    if (magic != 2049)
        throw IoError(path + ": bad IDX label magic " + std::to_string(magic) +
                      " (expected 2049)");
    const std::uint32_t n = be32(bytes.data() + 4);
    if (bytes.size() < 8 + static_cast<std::size_t>(n))
        throw IoError(path + ": payload shorter than header promises");
    std::vector<int> labels(n);
    for (std::uint32_t i = 0; i < n; ++i) labels[i] = bytes[8 + i];
    return labels;
}

RawDataset load_mnist(const std::string& images_path, const std::string& labels_path) {
    RawDataset ds = parse_idx_images(images_path);
    ds.labels = parse_idx_labels(labels_path);
    if (static_cast<int>(ds.labels.size()) != ds.count())
        throw IoError("MNIST image/label count mismatch: " + std::to_string(ds.count()) +
                      " images vs " + std::to_string(ds.labels.size()) + " labels");
    return ds;
}

RawDataset parse_cifar(const std::string& path) {
    const auto bytes = read_file(path);
    constexpr std::size_t record = 3073;
    if (bytes.empty() || bytes.size() % record != 0)
        throw IoError(path + ": length " + std::to_string(bytes.size()) +
                      " is not a multiple of 3073");
    const std::size_t n = bytes.size() / record;
    RawDataset ds;
    ds.channels = 3;
    ds.height = 32;
    ds.width = 32;
    ds.labels.resize(n);
    ds.pixels.resize(n * 3072);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t label = bytes[i * record];
        if (label > 9)
            throw IoError(path + ": record " + std::to_string(i) + " has invalid label " +
                          std::to_string(label));
        ds.labels[i] = label;
        std::memcpy(ds.pixels.data() + i * 3072, bytes.data() + i * record + 1, 3072);
    }
    return ds;
}

RawDataset load_cifar_train(const std::string& dir) {
    RawDataset all;
    for (int b = 1; b <= 5; ++b) {
        RawDataset part = parse_cifar(dir + "/data_batch_" + std::to_string(b) + ".bin");
        if (all.count() == 0) {
            all = std::move(part);
        } else {
            all.pixels.insert(all.pixels.end(), part.pixels.begin(), part.pixels.end());
            all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
        }
    }
    return all;
}

RawDataset load_cifar_test(const std::string& dir) { return parse_cifar(dir + "/test_batch.bin"); }

PgmImage parse_pgm(const std::string& path) {
    const auto bytes = read_file(path);
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < bytes.size()) {
            const char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#')
            tok.push_back(static_cast<char>(bytes[pos++]));
        if (tok.empty()) throw IoError(path + ": truncated PGM header");
        return tok;
    };

    const std::string magic = next_token();
    if (magic != "P5")
        throw IoError(path + ": unsupported PGM magic '" + magic + "' (binary P5 required)");
    const int width = std::stoi(next_token());
    const int height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (width < 1 || height < 1) throw IoError(path + ": bad PGM dimensions");
    if (maxval < 1 || maxval > 255)
        throw IoError(path + ": PGM maxval " + std::to_string(maxval) + " exceeds 8-bit range");
    if (pos >= bytes.size()) throw IoError(path + ": truncated PGM header");
    ++pos; // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(width) * height;
    if (bytes.size() < pos + need) throw IoError(path + ": truncated PGM payload");
    PgmImage img;
    img.height = height;
    img.width = width;
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
    return img;
}

void write_pgm(const std::string& path, const PgmImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

Tensor normalize_images(const RawDataset& raw, bool pad_28_to_32) {
    std::vector<int> all(static_cast<std::size_t>(raw.count()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return gather_normalized(raw, all, pad_28_to_32);
}

// ---- protocols ----

DatasetSplit build_mnist_protocol(const RawDataset& raw, int inlier_class, std::uint64_t seed,
                                  double val_fraction) {
    if (inlier_class < 0 || inlier_class > 9)
        throw ConfigError("MNIST inlier class must be 0..9");
    if (val_fraction < 0.0 || val_fraction > 0.5)
        throw ConfigError("validation fraction must lie in [0, 0.5]");

    std::vector<int> inliers, pool;
    for (int i = 0; i < raw.count(); ++i)
        (raw.labels[static_cast<std::size_t>(i)] == inlier_class ? inliers : pool).push_back(i);
    if (inliers.empty())
        throw ConfigError("class " + std::to_string(inlier_class) + " absent from dataset");

    Rng rng(seed);
    rng.shuffle(inliers);
    rng.shuffle(pool);

    // 2:1 train:test over the inlier class, then a 30% outlier share in test:
    // n_out / (n_out + n_test_in) = 3/10  =>  n_out = n_test_in * 3/7.
    const int n_train_block = static_cast<int>(2 * inliers.size() / 3);
    const int n_test_in = static_cast<int>(inliers.size()) - n_train_block;
    const int n_test_out =
        static_cast<int>(std::llround(static_cast<double>(n_test_in) * 3.0 / 7.0));
    if (n_test_out > static_cast<int>(pool.size()))
        throw ConfigError("not enough outlier images for the MNIST protocol");
    const int n_val_in = static_cast<int>(val_fraction * n_train_block);
    const int n_val_out = std::min(n_val_in, static_cast<int>(pool.size()) - n_test_out);
    const int n_train = n_train_block - n_val_in;
    if (n_train < 1) throw ConfigError("training split is empty under this protocol");

    std::vector<int> train_idx(inliers.begin(), inliers.begin() + n_train);
    std::vector<int> val_idx(inliers.begin() + n_train, inliers.begin() + n_train_block);
    std::vector<int> test_idx(inliers.begin() + n_train_block, inliers.end());
    std::vector<int> test_out_idx(pool.begin(), pool.begin() + n_test_out);
    std::vector<int> val_out_idx(pool.begin() + n_test_out, pool.begin() + n_test_out + n_val_out);

    DatasetSplit split;
    split.meta.protocol = "mnist";
    split.meta.inlier_class = inlier_class;
    split.meta.seed = seed;

    split.train = gather_normalized(raw, train_idx, true);

    std::vector<int> val_all = val_idx;
    val_all.insert(val_all.end(), val_out_idx.begin(), val_out_idx.end());
    split.val = gather_normalized(raw, val_all, true);
    split.val_labels.assign(val_idx.size(), 0);
    split.val_labels.insert(split.val_labels.end(), val_out_idx.size(), 1);

    std::vector<int> test_all = test_idx;
    test_all.insert(test_all.end(), test_out_idx.begin(), test_out_idx.end());
    split.test = gather_normalized(raw, test_all, true);
    split.test_labels.assign(test_idx.size(), 0);
    split.test_labels.insert(split.test_labels.end(), test_out_idx.size(), 1);

    split.meta.n_train = n_train;
    split.meta.n_val = static_cast<int>(val_all.size());
    split.meta.n_val_outliers = n_val_out;
    split.meta.n_test = static_cast<int>(test_all.size());
    split.meta.n_test_outliers = n_test_out;
    split.meta.train_index_hash = index_hash(train_idx);
    split.meta.val_index_hash = index_hash(val_all);
    split.meta.test_index_hash = index_hash(test_all);
    return split;
}

DatasetSplit build_cifar_protocol(const RawDataset& train_raw, const RawDataset& test_raw,
                                  int inlier_class, std::uint64_t seed, double val_fraction) {
    if (inlier_class < 0 || inlier_class > 9)
        throw ConfigError("CIFAR inlier class must be 0..9");
    if (val_fraction < 0.0 || val_fraction > 0.5)
        throw ConfigError("validation fraction must lie in [0, 0.5]");

    std::vector<int> inliers, pool;
    for (int i = 0; i < train_raw.count(); ++i)
        (train_raw.labels[static_cast<std::size_t>(i)] == inlier_class ? inliers : pool)
            .push_back(i);
    if (inliers.empty())
        throw ConfigError("class " + std::to_string(inlier_class) + " absent from training data");

    Rng rng(seed);
    rng.shuffle(inliers);
    rng.shuffle(pool);

    const int n_val_in = static_cast<int>(val_fraction * inliers.size());
    const int n_val_out = std::min(n_val_in, static_cast<int>(pool.size()));
    const int n_train = static_cast<int>(inliers.size()) - n_val_in;
    if (n_train < 1) throw ConfigError("training split is empty under this protocol");

    std::vector<int> train_idx(inliers.begin(), inliers.begin() + n_train);
    std::vector<int> val_idx(inliers.begin() + n_train, inliers.end());
    std::vector<int> val_out_idx(pool.begin(), pool.begin() + n_val_out);

    DatasetSplit split;
    split.meta.protocol = "cifar";
    split.meta.inlier_class = inlier_class;
    split.meta.seed = seed;

    split.train = gather_normalized(train_raw, train_idx, false);

    std::vector<int> val_all = val_idx;
    val_all.insert(val_all.end(), val_out_idx.begin(), val_out_idx.end());
    split.val = gather_normalized(train_raw, val_all, false);
    split.val_labels.assign(val_idx.size(), 0);
    split.val_labels.insert(split.val_labels.end(), val_out_idx.size(), 1);

    // Predefined test split, all classes, in file order.
    std::vector<int> test_idx(static_cast<std::size_t>(test_raw.count()));
    for (std::size_t i = 0; i < test_idx.size(); ++i) test_idx[i] = static_cast<int>(i);
    split.test = gather_normalized(test_raw, test_idx, false);
    split.test_labels.resize(test_idx.size());
    int n_test_out = 0;
    for (std::size_t i = 0; i < test_idx.size(); ++i) {
        split.test_labels[i] = test_raw.labels[i] == inlier_class ? 0 : 1;
        n_test_out += split.test_labels[i];
    }

    split.meta.n_train = n_train;
    split.meta.n_val = static_cast<int>(val_all.size());
    split.meta.n_val_outliers = n_val_out;
    split.meta.n_test = static_cast<int>(test_idx.size());
    split.meta.n_test_outliers = n_test_out;
    split.meta.train_index_hash = index_hash(train_idx);
    split.meta.val_index_hash = index_hash(val_all);
    split.meta.test_index_hash = index_hash(test_idx);
    return split;
}

Tensor extract_patches(const Tensor& frame, int size, int stride) {
    if (frame.rank() != 3 || frame.shape[0] != 1)
        throw ShapeError("extract_patches wants a [1,H,W] frame");
    if (size < 1 || stride != size)
        throw ConfigError("only non-overlapping grids are supported (stride == size)");
    const int H = frame.shape[1], W = frame.shape[2];
    if (H % size != 0 || W % size != 0)
        throw ConfigError("frame " + std::to_string(H) + "x" + std::to_string(W) +
                          " is not divisible into " + std::to_string(size) + "x" +
                          std::to_string(size) + " patches");
    const int rows = H / size, cols = W / size;
    Tensor patches({rows * cols, 1, size, size});
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            float* dst = patches.ptr() +
                         static_cast<std::size_t>(r * cols + c) * size * size;
            for (int y = 0; y < size; ++y)
                std::memcpy(dst + static_cast<std::size_t>(y) * size,
                            frame.ptr() + (static_cast<std::size_t>(r * size + y)) * W + c * size,
                            sizeof(float) * static_cast<std::size_t>(size));
        }
    return patches;
}

Tensor reassemble_patches(const Tensor& patches, int height, int width) {
    if (patches.rank() != 4 || patches.shape[1] != 1)
        throw ShapeError("reassemble_patches wants [P,1,s,s] patches");
    const int size = patches.shape[2];
    if (patches.shape[3] != size || height % size != 0 || width % size != 0)
        throw ShapeError("patch grid does not tile the requested frame");
    const int rows = height / size, cols = width / size;
    if (patches.shape[0] != rows * cols)
        throw ShapeError("patch count does not match the requested frame");
    Tensor frame({1, height, width});
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const float* src =
                patches.ptr() + static_cast<std::size_t>(r * cols + c) * size * size;
            for (int y = 0; y < size; ++y)
                std::memcpy(frame.ptr() + (static_cast<std::size_t>(r * size + y)) * width +
                                c * size,
                            src + static_cast<std::size_t>(y) * size,
                            sizeof(float) * static_cast<std::size_t>(size));
        }
    return frame;
}

DatasetSplit build_ucsd_protocol(const std::string& dir, std::uint64_t seed, double val_fraction,
                                 int patch_size) {
    const auto train_files = sorted_pgm_files(dir + "/train");
    const auto test_files = sorted_pgm_files(dir + "/test");

    std::ifstream labels_in(dir + "/test_labels.txt");
    if (!labels_in) throw IoError("missing '" + dir + "/test_labels.txt'");
    std::vector<int> frame_labels;
    int v;
    while (labels_in >> v) {
        if (v != 0 && v != 1) throw IoError("test_labels.txt entries must be 0 or 1");
        frame_labels.push_back(v);
    }
    if (frame_labels.size() != test_files.size())
        throw IoError("test_labels.txt has " + std::to_string(frame_labels.size()) +
                      " labels for " + std::to_string(test_files.size()) + " frames");

    auto frame_tensor = [](const PgmImage& img) {
        Tensor t({1, img.height, img.width});
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            t.data[i] = static_cast<float>(img.pixels[i]) / 127.5f - 1.0f;
        return t;
    };

    std::vector<Tensor> train_patches;
    for (const auto& f : train_files)
        train_patches.push_back(extract_patches(frame_tensor(parse_pgm(f)), patch_size, patch_size));
    const int per_frame = train_patches.front().shape[0];

    // Stack all training patches, then carve the validation tail from a
    // seeded shuffle. UCSD training data has no outliers, so validation is
    // inlier-only; epoch selection falls back to the validation loss.
    const int n_all = per_frame * static_cast<int>(train_patches.size());
    Tensor all({n_all, 1, patch_size, patch_size});
    {
        std::size_t off = 0;
        for (const Tensor& p : train_patches) {
            std::memcpy(all.ptr() + off, p.ptr(), sizeof(float) * static_cast<std::size_t>(p.numel()));
            off += static_cast<std::size_t>(p.numel());
        }
    }
    std::vector<int> order(static_cast<std::size_t>(n_all));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(seed);
    rng.shuffle(order);
    const int n_val = static_cast<int>(val_fraction * n_all);
    const int n_train = n_all - n_val;
    if (n_train < 1) throw ConfigError("training split is empty under this protocol");

    const std::size_t per = static_cast<std::size_t>(patch_size) * patch_size;
    DatasetSplit split;
    split.meta.protocol = "ucsd";
    split.meta.seed = seed;
    split.train = Tensor({n_train, 1, patch_size, patch_size});
    for (int i = 0; i < n_train; ++i)
        std::memcpy(split.train.ptr() + static_cast<std::size_t>(i) * per,
                    all.ptr() + static_cast<std::size_t>(order[static_cast<std::size_t>(i)]) * per,
                    sizeof(float) * per);
    if (n_val > 0) {
        split.val = Tensor({n_val, 1, patch_size, patch_size});
        for (int i = 0; i < n_val; ++i)
            std::memcpy(
                split.val.ptr() + static_cast<std::size_t>(i) * per,
                all.ptr() + static_cast<std::size_t>(order[static_cast<std::size_t>(n_train + i)]) * per,
                sizeof(float) * per);
        split.val_labels.assign(static_cast<std::size_t>(n_val), 0);
    }

    std::vector<Tensor> test_patches;
    for (const auto& f : test_files)
        test_patches.push_back(extract_patches(frame_tensor(parse_pgm(f)), patch_size, patch_size));
    const int n_test = per_frame * static_cast<int>(test_patches.size());
    split.test = Tensor({n_test, 1, patch_size, patch_size});
    {
        std::size_t off = 0;
        for (std::size_t fi = 0; fi < test_patches.size(); ++fi) {
            std::memcpy(split.test.ptr() + off, test_patches[fi].ptr(),
                        sizeof(float) * static_cast<std::size_t>(test_patches[fi].numel()));
            off += static_cast<std::size_t>(test_patches[fi].numel());
            for (int p = 0; p < per_frame; ++p) {
                split.test_groups.push_back(static_cast<int>(fi));
                split.test_labels.push_back(frame_labels[fi]);
            }
        }
    }
    split.group_labels = frame_labels;

    split.meta.n_train = n_train;
    split.meta.n_val = n_val;
    split.meta.n_test = n_test;
    split.meta.n_test_outliers =
        static_cast<int>(std::count(split.test_labels.begin(), split.test_labels.end(), 1));
    split.meta.train_index_hash = index_hash(order);
    split.meta.test_index_hash = index_hash(frame_labels);
    return split;
}

void write_split_meta(const std::string& path, const SplitMeta& meta) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "protocol = " << meta.protocol << "\n";
    out << "inlier_class = " << meta.inlier_class << "\n";
    out << "seed = " << meta.seed << "\n";
    out << "n_train = " << meta.n_train << "\n";
    out << "n_val = " << meta.n_val << "\n";
    out << "n_val_outliers = " << meta.n_val_outliers << "\n";
    out << "n_test = " << meta.n_test << "\n";
    out << "n_test_outliers = " << meta.n_test_outliers << "\n";
    out << "train_index_hash = " << meta.train_index_hash << "\n";
    out << "val_index_hash = " << meta.val_index_hash << "\n";
    out << "test_index_hash = " << meta.test_index_hash << "\n";
}

} // namespace oled
