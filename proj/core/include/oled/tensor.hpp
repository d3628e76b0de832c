#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oled/error.hpp"

namespace oled {

/// Dense row-major float tensor. Image batches use N x C x H x W layout.
/// Shape extents are strictly positive; data length always equals the
/// product of the extents.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;

    explicit Tensor(std::vector<int> s)
        : shape(std::move(s)), data(static_cast<std::size_t>(checked_numel(shape)), 0.0f) {}

    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != checked_numel(shape))
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<int> s, float v) {
        Tensor t(std::move(s));
        for (float& x : t.data) x = v;
        return t;
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    int dim(int i) const {
        if (i < 0 || i >= rank())
            throw ShapeError("dim " + std::to_string(i) + " out of range for " + shape_str(shape));
        return shape[static_cast<std::size_t>(i)];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }

    /// Element access for rank-4 tensors; slow path, loops should use ptr().
    float& at4(int n, int c, int h, int w) {
        return data[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    float at4(int n, int c, int h, int w) const {
        return data[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }

    /// Same data, new shape; element count must be preserved.
    Tensor reshaped(std::vector<int> s) const {
        if (checked_numel(s) != numel())
            throw ShapeError("reshape " + shape_str(shape) + " -> " + shape_str(s) +
                             " changes element count");
        Tensor t;
        t.shape = std::move(s);
        t.data = data;
        return t;
    }

    bool all_finite() const;

    static std::int64_t checked_numel(const std::vector<int>& s);
    static std::string shape_str(const std::vector<int>& s);
};

/// Throws ShapeError unless t has exactly the given shape. `what` names the
/// value being checked in the error message.
void require_shape(const Tensor& t, const std::vector<int>& shape, const std::string& what);

/// Throws NumericError if any element of t is NaN or infinite.
void require_finite(const Tensor& t, const std::string& what);

} // namespace oled
