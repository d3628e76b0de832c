#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "oled/rng.hpp"
#include "oled/tensor.hpp"

namespace oled {

enum class Mode { Train, Infer };

/// Per-layer activation record from a train-mode forward pass. `input` is
/// the tensor the layer consumed; `saved` holds whatever else the layer
/// needs for its backward pass.
struct LayerCtx {
    Tensor input;
    std::vector<Tensor> saved;
};

/// Activation record for a whole stack, one entry per layer.
using Tape = std::vector<LayerCtx>;

/// Parameter gradients keyed by "<layer>.<param>".
using GradMap = std::map<std::string, Tensor>;

/// Named view of a layer parameter. Non-trainable entries (batchnorm running
/// statistics) are serialized but receive no gradients.
struct ParamRef {
    std::string name;
    Tensor* value;
    bool trainable;
};

class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    const std::string& name() const { return name_; }
    virtual std::string kind() const = 0;

    /// ctx is non-null exactly when a backward pass will follow.
    virtual Tensor forward(const Tensor& x, Mode mode, LayerCtx* ctx) = 0;

    /// Returns grad wrt the layer input; fills grads (bare param names) for
    /// every trainable parameter.
    virtual Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) = 0;

    virtual std::vector<ParamRef> params() { return {}; }
    virtual void init(Rng&) {}

    /// Output extents for a given per-sample input shape.
    virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;

protected:
    std::string name_;
};

/// Ordered, uniquely named sequence of layers: the whole-network unit for
/// forward/backward, parameter iteration, and checkpointing.
class LayerStack {
public:
    LayerStack() = default;
    LayerStack(LayerStack&&) = default;
    LayerStack& operator=(LayerStack&&) = default;

    void add(std::unique_ptr<Layer> layer);

    /// Declared per-sample input shape (C,H,W or feature count). When set,
    /// forward() validates batches against it.
    void set_input_shape(std::vector<int> shape) { input_shape_ = std::move(shape); }
    const std::vector<int>& input_shape() const { return input_shape_; }
    std::vector<int> output_shape() const;

    /// Train mode records activations into *tape and lets batchnorm update
    /// running statistics; infer mode uses running statistics, mutates
    /// nothing, and records no tape (tape must be null).
    Tensor forward(const Tensor& x, Mode mode, Tape* tape = nullptr);

    /// Backward through a tape produced by a matching train-mode forward.
    /// Returns grad wrt the stack input; grads is keyed "<layer>.<param>".
    Tensor backward(const Tape& tape, const Tensor& grad_out, GradMap& grads);

    std::vector<ParamRef> parameters();
    void init(Rng& rng);

    std::size_t size() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<int> input_shape_;
};

/// Adds src into dst element-wise (used to merge gradients from the two
/// reconstruction passes).
void accumulate_grads(GradMap& dst, const GradMap& src);

// ---- concrete layers ----

class Conv2d : public Layer {
public:
    Conv2d(std::string name, int in_ch, int out_ch, int k, int stride, int pad);
    std::string kind() const override { return "conv2d"; }
    Tensor forward(const Tensor& x, Mode mode, LayerCtx* ctx) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) override;
    std::vector<ParamRef> params() override;
    void init(Rng& rng) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

private:
    int in_ch_, out_ch_, k_, stride_, pad_;
    Tensor weight_; // [out_ch, in_ch, k, k]
    Tensor bias_;   // [out_ch]
};

class TransposedConv2d : public Layer {
public:
    TransposedConv2d(std::string name, int in_ch, int out_ch, int k, int stride, int pad,
                     int out_pad);
    std::string kind() const override { return "transposed-conv2d"; }
    Tensor forward(const Tensor& x, Mode mode, LayerCtx* ctx) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) override;
    std::vector<ParamRef> params() override;
    void init(Rng& rng) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

private:
    int in_ch_, out_ch_, k_, stride_, pad_, out_pad_;
    Tensor weight_; // [in_ch, out_ch, k, k]
    Tensor bias_;   // [out_ch]
};

class Dense : public Layer {
public:
    Dense(std::string name, int in_features, int out_features);
    std::string kind() const override { return "dense"; }
    Tensor forward(const Tensor& x, Mode mode, LayerCtx* ctx) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) override;
    std::vector<ParamRef> params() override;
    void init(Rng& rng) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

private:
    int in_f_, out_f_;
    Tensor weight_; // [out_features, in_features]
    Tensor bias_;   // [out_features]
};

/// Per-channel batch normalization over N,H,W. Running statistics follow
/// running = momentum * running + (1 - momentum) * batch and move only in
/// train mode; normalization uses the biased batch variance.
class BatchNorm2d : public Layer {
public:
    BatchNorm2d(std::string name, int channels, float eps = 1e-5f, float momentum = 0.9f);
    std::string kind() const override { return "batchnorm"; }
    Tensor forward(const Tensor& x, Mode mode, LayerCtx* ctx) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) override;
    std::vector<ParamRef> params() override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

private:
    int channels_;
    float eps_, momentum_;
    Tensor gamma_, beta_, running_mean_, running_var_;
};

class LeakyReLU : public Layer {
public:
    LeakyReLU(std::string name, float slope) : Layer(std::move(name)), slope_(slope) {}
    std::string kind() const override { return "leaky-relu"; }
    Tensor forward(const Tensor& x, Mode mode, LayerCtx* ctx) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }

private:
    float slope_;
};

class ReLU : public Layer {
public:
    explicit ReLU(std::string name) : Layer(std::move(name)) {}
    std::string kind() const override { return "relu"; }
    Tensor forward(const Tensor& x, Mode mode, LayerCtx* ctx) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
};

/// Hard clamp to [lo, hi]; gradient is zero outside the open interval.
class Clip : public Layer {
public:
    Clip(std::string name, float lo, float hi) : Layer(std::move(name)), lo_(lo), hi_(hi) {}
    std::string kind() const override { return "clip"; }
    Tensor forward(const Tensor& x, Mode mode, LayerCtx* ctx) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }

private:
    float lo_, hi_;
};

/// Reinterprets each sample with a new per-sample shape (batch dim kept).
class Reshape : public Layer {
public:
    Reshape(std::string name, std::vector<int> sample_shape)
        : Layer(std::move(name)), sample_shape_(std::move(sample_shape)) {}
    std::string kind() const override { return "reshape"; }
    Tensor forward(const Tensor& x, Mode mode, LayerCtx* ctx) override;
    Tensor backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) override;
    std::vector<int> output_shape(const std::vector<int>& in) const override;

private:
    std::vector<int> sample_shape_;
};

} // namespace oled
