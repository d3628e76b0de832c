#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oled/tensor.hpp"

namespace oled {

/// 8-bit image set as parsed from disk, before normalization.
struct RawDataset {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels; // N x C x H x W, row-major
    std::vector<int> labels;          // one per image once paired

    int count() const {
        const std::size_t per = static_cast<std::size_t>(channels) * height * width;
        return per == 0 ? 0 : static_cast<int>(pixels.size() / per);
    }
};

/// IDX (MNIST distribution format) parsers. Big-endian header, magic 2051
/// for ubyte image cubes and 2049 for ubyte label vectors.
RawDataset parse_idx_images(const std::string& path);
std::vector<int> parse_idx_labels(const std::string& path);
RawDataset load_mnist(const std::string& images_path, const std::string& labels_path);

/// CIFAR-10 binary batch: 3073-byte records, 1 label byte + 3x32x32 pixels
/// in channel-planar order.
RawDataset parse_cifar(const std::string& path);
RawDataset load_cifar_train(const std::string& dir); // data_batch_1..5.bin
RawDataset load_cifar_test(const std::string& dir);  // test_batch.bin

struct PgmImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;
};

/// Binary P5 PGM with maxval <= 255; comment lines are skipped.
PgmImage parse_pgm(const std::string& path);
void write_pgm(const std::string& path, const PgmImage& img);

/// v / 127.5 - 1 into [-1,1]. With pad_28_to_32, 28x28 inputs are centered
/// on a 32x32 canvas filled with -1 so stride-2 arithmetic stays exact.
Tensor normalize_images(const RawDataset& raw, bool pad_28_to_32);

struct SplitMeta {
    std::string protocol;
    int inlier_class = -1;
    std::uint64_t seed = 0;
    int n_train = 0;
    int n_val = 0;
    int n_val_outliers = 0;
    int n_test = 0;
    int n_test_outliers = 0;
    std::uint64_t train_index_hash = 0;
    std::uint64_t val_index_hash = 0;
    std::uint64_t test_index_hash = 0;
};

/// Train/validation/test partitions of normalized images. Train holds
/// inliers only; labels are 0 = inlier, 1 = outlier. UCSD splits also carry
/// a frame id per test patch plus per-frame labels for frame-level scoring.
struct DatasetSplit {
    Tensor train;
    Tensor val;
    std::vector<int> val_labels;
    Tensor test;
    std::vector<int> test_labels;
    std::vector<int> test_groups;
    std::vector<int> group_labels;
    SplitMeta meta;
};

/// MNIST one-class protocol: the inlier class is split 2:1 train:test, test
/// outliers are sampled from the other classes so they form 30% of the test
/// set, and the validation set takes val_fraction of the training inliers
/// plus an equal count of outliers that never touch the test pool.
DatasetSplit build_mnist_protocol(const RawDataset& raw, int inlier_class, std::uint64_t seed,
                                  double val_fraction);

/// CIFAR one-class protocol over the predefined 50k/10k split: train is the
/// class's 5000 predefined training images (minus the validation carve),
/// test is all 10000 predefined test images.
DatasetSplit build_cifar_protocol(const RawDataset& train_raw, const RawDataset& test_raw,
                                  int inlier_class, std::uint64_t seed, double val_fraction);

/// Non-overlapping row-major patch grid from one [1,H,W] frame (H, W must be
/// divisible by size); result is [P,1,size,size].
Tensor extract_patches(const Tensor& frame, int size, int stride);

/// Inverse of extract_patches for a full non-overlapping grid.
Tensor reassemble_patches(const Tensor& patches, int height, int width);

/// UCSD directory protocol: dir/train/*.pgm (normal frames), dir/test/*.pgm,
/// dir/test_labels.txt with one 0/1 line per test frame in sorted filename
/// order. Frames are cut into non-overlapping patches; the validation carve
/// holds inlier patches only (no labeled outliers exist before test time).
DatasetSplit build_ucsd_protocol(const std::string& dir, std::uint64_t seed, double val_fraction,
                                 int patch_size = 30);

void write_split_meta(const std::string& path, const SplitMeta& meta);

/// FNV-1a over a list of 32-bit indices; used for split metadata.
std::uint64_t index_hash(const std::vector<int>& indices);

} // namespace oled
