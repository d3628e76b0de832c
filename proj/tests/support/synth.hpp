#pragma once

// Test-data fabrication: a deterministic handwritten-style digit corpus in
// MNIST IDX format, CIFAR-format batches, and UCSD-style PGM frame
// directories. Used by unit and acceptance tests when no real dataset is
// mounted; everything is a pure function of the seed.

#include <cstdint>
#include <string>
#include <vector>

#include "oled/datasets.hpp"

namespace oled::synth {

/// Stroke-rendered digits 0..9 on a 28x28 canvas, `per_class` samples per
/// class with jittered affine pose, stroke thickness and control points.
/// Background pixels are exactly 0, stroke cores near 255.
RawDataset digits(int per_class, std::uint64_t seed);

void write_idx_images(const std::string& path, const RawDataset& data);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

/// Writes digits(per_class, seed) as an IDX image/label pair.
void write_digit_idx_pair(const std::string& images_path, const std::string& labels_path,
                          int per_class, std::uint64_t seed);

/// Structured random 3x32x32 color images with 10 distinguishable classes.
RawDataset cifar_like(int count, std::uint64_t seed);

/// Writes records in the CIFAR-10 binary batch layout.
void write_cifar_batch(const std::string& path, const RawDataset& data);

/// UCSD-style directory: dir/train and dir/test of 240x360 P5 frames plus
/// dir/test_labels.txt. Normal frames carry small walking blobs; anomalous
/// test frames additionally contain one large bright object.
void write_ucsd_dir(const std::string& dir, int n_train, int n_test, std::uint64_t seed,
                    int height = 240, int width = 360);

} // namespace oled::synth
