#include "oled/layers.hpp"

#include <cmath>
#include <cstring>
#include <set>

#include "oled/kernels.hpp"

namespace oled {

namespace {

int conv_out_extent(int in, int k, int stride, int pad) {
    const int out = (in + 2 * pad - k) / stride + 1;
    return out;
}

void check_rank4(const Tensor& x, int channels, const std::string& layer) {
    if (x.rank() != 4)
        throw ShapeError(layer + ": expected N x C x H x W input, got " +
                         Tensor::shape_str(x.shape));
    if (x.shape[1] != channels)
        throw ShapeError(layer + ": expected " + std::to_string(channels) + " channels, got " +
                         Tensor::shape_str(x.shape));
}

void add_bias_rows(float* out, const float* bias, int channels, int plane) {
    for (int c = 0; c < channels; ++c) {
        const float b = bias[c];
        float* row = out + static_cast<std::size_t>(c) * plane;
        for (int i = 0; i < plane; ++i) row[i] += b;
    }
}

} // namespace

// ---- LayerStack ----

void LayerStack::add(std::unique_ptr<Layer> layer) {
    for (const auto& l : layers_)
        if (l->name() == layer->name())
            throw ConfigError("duplicate layer name '" + layer->name() + "'");
    layers_.push_back(std::move(layer));
}

std::vector<int> LayerStack::output_shape() const {
    std::vector<int> s = input_shape_;
    for (const auto& l : layers_) s = l->output_shape(s);
    return s;
}

Tensor LayerStack::forward(const Tensor& x, Mode mode, Tape* tape) {
    if (mode == Mode::Infer && tape)
        throw Error("infer-mode forward records no tape");
    if (!input_shape_.empty()) {
        if (x.rank() != static_cast<int>(input_shape_.size()) + 1 ||
            !std::equal(input_shape_.begin(), input_shape_.end(), x.shape.begin() + 1))
            throw ShapeError("stack input: expected per-sample shape " +
                             Tensor::shape_str(input_shape_) + ", got batch " +
                             Tensor::shape_str(x.shape));
    }
    if (tape) {
        tape->clear();
        tape->resize(layers_.size());
    }
    Tensor cur = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (tape) {
            LayerCtx& ctx = (*tape)[i];
            ctx.input = std::move(cur);
            cur = layers_[i]->forward(ctx.input, mode, &ctx);
        } else {
            cur = layers_[i]->forward(cur, mode, nullptr);
        }
    }
    return cur;
}

Tensor LayerStack::backward(const Tape& tape, const Tensor& grad_out, GradMap& grads) {
    if (tape.size() != layers_.size())
        throw Error("tape/stack mismatch: tape has " + std::to_string(tape.size()) +
                    " entries for " + std::to_string(layers_.size()) + " layers");
    Tensor g = grad_out;
    for (std::size_t n = layers_.size(); n-- > 0;) {
        GradMap local;
        g = layers_[n]->backward(g, tape[n], local);
        for (auto& [k, v] : local) grads.emplace(layers_[n]->name() + "." + k, std::move(v));
    }
    return g;
}

std::vector<ParamRef> LayerStack::parameters() {
    std::vector<ParamRef> out;
    for (const auto& l : layers_)
        for (ParamRef p : l->params())
            out.push_back({l->name() + "." + p.name, p.value, p.trainable});
    return out;
}

void LayerStack::init(Rng& rng) {
    for (const auto& l : layers_) l->init(rng);
}

void accumulate_grads(GradMap& dst, const GradMap& src) {
    for (const auto& [k, v] : src) {
        auto it = dst.find(k);
        if (it == dst.end()) {
            dst.emplace(k, v);
            continue;
        }
        if (!it->second.same_shape(v))
            throw ShapeError("gradient shape mismatch for '" + k + "'");
        float* d = it->second.ptr();
        const float* s = v.ptr();
        for (std::int64_t i = 0; i < v.numel(); ++i) d[i] += s[i];
    }
}

// ---- Conv2d ----

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int k, int stride, int pad)
    : Layer(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride), pad_(pad),
      weight_({out_ch, in_ch, k, k}), bias_({out_ch}) {
    if (in_ch < 1 || out_ch < 1 || k < 1 || stride < 1 || pad < 0)
        throw ConfigError(name_ + ": bad conv2d hyperparameters");
}

std::vector<int> Conv2d::output_shape(const std::vector<int>& in) const {
    if (in.size() != 3 || in[0] != in_ch_)
        throw ShapeError(name_ + ": conv2d expects C x H x W input shape");
    return {out_ch_, conv_out_extent(in[1], k_, stride_, pad_),
            conv_out_extent(in[2], k_, stride_, pad_)};
}

void Conv2d::init(Rng& rng) {
    const float bound = std::sqrt(6.0f / static_cast<float>(in_ch_ * k_ * k_));
    for (float& w : weight_.data) w = rng.uniform(-bound, bound);
    for (float& b : bias_.data) b = 0.0f;
}

std::vector<ParamRef> Conv2d::params() {
    return {{"weight", &weight_, true}, {"bias", &bias_, true}};
}

Tensor Conv2d::forward(const Tensor& x, Mode, LayerCtx* ctx) {
    check_rank4(x, in_ch_, name_);
    const int N = x.shape[0], H = x.shape[2], W = x.shape[3];
    const int oh = conv_out_extent(H, k_, stride_, pad_);
    const int ow = conv_out_extent(W, k_, stride_, pad_);
    if (oh < 1 || ow < 1)
        throw ShapeError(name_ + ": input " + Tensor::shape_str(x.shape) + " too small for conv");
    const int ckk = in_ch_ * k_ * k_;
    const int plane = oh * ow;

    Tensor y({N, out_ch_, oh, ow});
    std::vector<float> col(static_cast<std::size_t>(ckk) * plane);
    for (int n = 0; n < N; ++n) {
        const float* xn = x.ptr() + static_cast<std::size_t>(n) * in_ch_ * H * W;
        float* yn = y.ptr() + static_cast<std::size_t>(n) * out_ch_ * plane;
        im2col(xn, in_ch_, H, W, k_, stride_, pad_, col.data(), oh, ow);
        gemm_nn(weight_.ptr(), col.data(), yn, out_ch_, ckk, plane, false);
        add_bias_rows(yn, bias_.ptr(), out_ch_, plane);
    }
    (void)ctx; // input is captured by the stack
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) {
    const Tensor& x = ctx.input;
    const int N = x.shape[0], H = x.shape[2], W = x.shape[3];
    const int oh = conv_out_extent(H, k_, stride_, pad_);
    const int ow = conv_out_extent(W, k_, stride_, pad_);
    require_shape(grad_out, {N, out_ch_, oh, ow}, name_ + ": grad_out");
    const int ckk = in_ch_ * k_ * k_;
    const int plane = oh * ow;

    Tensor dw({out_ch_, in_ch_, k_, k_});
    Tensor db({out_ch_});
    Tensor dx({N, in_ch_, H, W});
    std::vector<float> col(static_cast<std::size_t>(ckk) * plane);
    std::vector<float> gcol(static_cast<std::size_t>(ckk) * plane);

    for (int n = 0; n < N; ++n) {
        const float* xn = x.ptr() + static_cast<std::size_t>(n) * in_ch_ * H * W;
        const float* gn = grad_out.ptr() + static_cast<std::size_t>(n) * out_ch_ * plane;
        float* dxn = dx.ptr() + static_cast<std::size_t>(n) * in_ch_ * H * W;

        im2col(xn, in_ch_, H, W, k_, stride_, pad_, col.data(), oh, ow);
        gemm_nt(gn, col.data(), dw.ptr(), out_ch_, plane, ckk, true);
        for (int c = 0; c < out_ch_; ++c) {
            const float* row = gn + static_cast<std::size_t>(c) * plane;
            float acc = db.data[static_cast<std::size_t>(c)];
            for (int i = 0; i < plane; ++i) acc += row[i];
            db.data[static_cast<std::size_t>(c)] = acc;
        }
        gemm_tn(weight_.ptr(), gn, gcol.data(), ckk, out_ch_, plane, false);
        col2im_add(gcol.data(), in_ch_, H, W, k_, stride_, pad_, dxn, oh, ow);
    }
    grads.emplace("weight", std::move(dw));
    grads.emplace("bias", std::move(db));
    return dx;
}

// ---- TransposedConv2d ----

TransposedConv2d::TransposedConv2d(std::string name, int in_ch, int out_ch, int k, int stride,
                                   int pad, int out_pad)
    : Layer(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), k_(k), stride_(stride), pad_(pad),
      out_pad_(out_pad), weight_({in_ch, out_ch, k, k}), bias_({out_ch}) {
    if (in_ch < 1 || out_ch < 1 || k < 1 || stride < 1 || pad < 0)
        throw ConfigError(name_ + ": bad transposed-conv2d hyperparameters");
    if (out_pad < 0 || out_pad >= stride)
        throw ConfigError(name_ + ": output padding must lie in [0, stride)");
}

std::vector<int> TransposedConv2d::output_shape(const std::vector<int>& in) const {
    if (in.size() != 3 || in[0] != in_ch_)
        throw ShapeError(name_ + ": transposed-conv2d expects C x H x W input shape");
    return {out_ch_, (in[1] - 1) * stride_ - 2 * pad_ + k_ + out_pad_,
            (in[2] - 1) * stride_ - 2 * pad_ + k_ + out_pad_};
}

void TransposedConv2d::init(Rng& rng) {
    const float bound = std::sqrt(6.0f / static_cast<float>(in_ch_ * k_ * k_));
    for (float& w : weight_.data) w = rng.uniform(-bound, bound);
    for (float& b : bias_.data) b = 0.0f;
}

std::vector<ParamRef> TransposedConv2d::params() {
    return {{"weight", &weight_, true}, {"bias", &bias_, true}};
}

Tensor TransposedConv2d::forward(const Tensor& x, Mode, LayerCtx* ctx) {
    check_rank4(x, in_ch_, name_);
    const int N = x.shape[0], ih = x.shape[2], iw = x.shape[3];
    const int oh = (ih - 1) * stride_ - 2 * pad_ + k_ + out_pad_;
    const int ow = (iw - 1) * stride_ - 2 * pad_ + k_ + out_pad_;
    if (oh < 1 || ow < 1) throw ShapeError(name_ + ": degenerate output extent");
    const int ckk = out_ch_ * k_ * k_;
    const int in_plane = ih * iw;
    const int out_plane = oh * ow;

    Tensor y({N, out_ch_, oh, ow});
    std::vector<float> patches(static_cast<std::size_t>(ckk) * in_plane);
    for (int n = 0; n < N; ++n) {
        const float* xn = x.ptr() + static_cast<std::size_t>(n) * in_ch_ * in_plane;
        float* yn = y.ptr() + static_cast<std::size_t>(n) * out_ch_ * out_plane;
        // weight viewed [in_ch x out_ch*k*k]; patches = W^T * x
        gemm_tn(weight_.ptr(), xn, patches.data(), ckk, in_ch_, in_plane, false);
        col2im_add(patches.data(), out_ch_, oh, ow, k_, stride_, pad_, yn, ih, iw);
        add_bias_rows(yn, bias_.ptr(), out_ch_, out_plane);
    }
    (void)ctx;
    return y;
}

Tensor TransposedConv2d::backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) {
    const Tensor& x = ctx.input;
    const int N = x.shape[0], ih = x.shape[2], iw = x.shape[3];
    const int oh = (ih - 1) * stride_ - 2 * pad_ + k_ + out_pad_;
    const int ow = (iw - 1) * stride_ - 2 * pad_ + k_ + out_pad_;
    require_shape(grad_out, {N, out_ch_, oh, ow}, name_ + ": grad_out");
    const int ckk = out_ch_ * k_ * k_;
    const int in_plane = ih * iw;
    const int out_plane = oh * ow;

    Tensor dw({in_ch_, out_ch_, k_, k_});
    Tensor db({out_ch_});
    Tensor dx({N, in_ch_, ih, iw});
    std::vector<float> gpatches(static_cast<std::size_t>(ckk) * in_plane);

    for (int n = 0; n < N; ++n) {
        const float* xn = x.ptr() + static_cast<std::size_t>(n) * in_ch_ * in_plane;
        const float* gn = grad_out.ptr() + static_cast<std::size_t>(n) * out_ch_ * out_plane;
        float* dxn = dx.ptr() + static_cast<std::size_t>(n) * in_ch_ * in_plane;

        im2col(gn, out_ch_, oh, ow, k_, stride_, pad_, gpatches.data(), ih, iw);
        gemm_nn(weight_.ptr(), gpatches.data(), dxn, in_ch_, ckk, in_plane, false);
        gemm_nt(xn, gpatches.data(), dw.ptr(), in_ch_, in_plane, ckk, true);
        for (int c = 0; c < out_ch_; ++c) {
            const float* row = gn + static_cast<std::size_t>(c) * out_plane;
            float acc = db.data[static_cast<std::size_t>(c)];
            for (int i = 0; i < out_plane; ++i) acc += row[i];
            db.data[static_cast<std::size_t>(c)] = acc;
        }
    }
    grads.emplace("weight", std::move(dw));
    grads.emplace("bias", std::move(db));
    return dx;
}

// ---- Dense ----

Dense::Dense(std::string name, int in_features, int out_features)
    : Layer(std::move(name)), in_f_(in_features), out_f_(out_features),
      weight_({out_features, in_features}), bias_({out_features}) {
    if (in_features < 1 || out_features < 1)
        throw ConfigError(name_ + ": bad dense dimensions");
}

std::vector<int> Dense::output_shape(const std::vector<int>& in) const {
    if (in.size() != 1 || in[0] != in_f_)
        throw ShapeError(name_ + ": dense expects flat input of " + std::to_string(in_f_));
    return {out_f_};
}

void Dense::init(Rng& rng) {
    const float bound = std::sqrt(6.0f / static_cast<float>(in_f_));
    for (float& w : weight_.data) w = rng.uniform(-bound, bound);
    for (float& b : bias_.data) b = 0.0f;
}

std::vector<ParamRef> Dense::params() {
    return {{"weight", &weight_, true}, {"bias", &bias_, true}};
}

Tensor Dense::forward(const Tensor& x, Mode, LayerCtx* ctx) {
    if (x.rank() != 2 || x.shape[1] != in_f_)
        throw ShapeError(name_ + ": expected N x " + std::to_string(in_f_) + " input, got " +
                         Tensor::shape_str(x.shape));
    const int N = x.shape[0];
    Tensor y({N, out_f_});
    gemm_nt(x.ptr(), weight_.ptr(), y.ptr(), N, in_f_, out_f_, false);
    for (int n = 0; n < N; ++n)
        add_bias_rows(y.ptr() + static_cast<std::size_t>(n) * out_f_, bias_.ptr(), out_f_, 1);
    (void)ctx;
    return y;
}

Tensor Dense::backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) {
    const Tensor& x = ctx.input;
    const int N = x.shape[0];
    require_shape(grad_out, {N, out_f_}, name_ + ": grad_out");

    Tensor dw({out_f_, in_f_});
    Tensor db({out_f_});
    Tensor dx({N, in_f_});
    gemm_tn(grad_out.ptr(), x.ptr(), dw.ptr(), out_f_, N, in_f_, false);
    for (int n = 0; n < N; ++n) {
        const float* row = grad_out.ptr() + static_cast<std::size_t>(n) * out_f_;
        for (int j = 0; j < out_f_; ++j) db.data[static_cast<std::size_t>(j)] += row[j];
    }
    gemm_nn(grad_out.ptr(), weight_.ptr(), dx.ptr(), N, out_f_, in_f_, false);
    grads.emplace("weight", std::move(dw));
    grads.emplace("bias", std::move(db));
    return dx;
}

// ---- BatchNorm2d ----

BatchNorm2d::BatchNorm2d(std::string name, int channels, float eps, float momentum)
    : Layer(std::move(name)), channels_(channels), eps_(eps), momentum_(momentum),
      gamma_(Tensor::full({channels}, 1.0f)), beta_({channels}),
      running_mean_({channels}), running_var_(Tensor::full({channels}, 1.0f)) {
    if (channels < 1) throw ConfigError(name_ + ": bad channel count");
}

std::vector<ParamRef> BatchNorm2d::params() {
    return {{"gamma", &gamma_, true},
            {"beta", &beta_, true},
            {"running_mean", &running_mean_, false},
            {"running_var", &running_var_, false}};
}

std::vector<int> BatchNorm2d::output_shape(const std::vector<int>& in) const {
    if (in.size() != 3 || in[0] != channels_)
        throw ShapeError(name_ + ": batchnorm expects C x H x W input shape");
    return in;
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode, LayerCtx* ctx) {
    check_rank4(x, channels_, name_);
    const int N = x.shape[0], H = x.shape[2], W = x.shape[3];
    const int plane = H * W;
    const std::int64_t m = static_cast<std::int64_t>(N) * plane;
    Tensor y(x.shape);

    if (mode == Mode::Infer) {
        for (int c = 0; c < channels_; ++c) {
            const float scale =
                gamma_.data[c] / std::sqrt(running_var_.data[c] + eps_);
            const float shift = beta_.data[c] - scale * running_mean_.data[c];
            for (int n = 0; n < N; ++n) {
                const float* src = x.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
                float* dst = y.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
                for (int i = 0; i < plane; ++i) dst[i] = scale * src[i] + shift;
            }
        }
        return y;
    }

    Tensor xhat(x.shape);
    Tensor invstd({channels_});
    for (int c = 0; c < channels_; ++c) {
        double sum = 0.0;
        for (int n = 0; n < N; ++n) {
            const float* src = x.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            for (int i = 0; i < plane; ++i) sum += src[i];
        }
        const double mean = sum / static_cast<double>(m);
        double sq = 0.0;
        for (int n = 0; n < N; ++n) {
            const float* src = x.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            for (int i = 0; i < plane; ++i) {
                const double d = src[i] - mean;
                sq += d * d;
            }
        }
        const double var = sq / static_cast<double>(m); // biased
        const float istd = static_cast<float>(1.0 / std::sqrt(var + eps_));
        invstd.data[c] = istd;
        const float mu = static_cast<float>(mean);
        const float g = gamma_.data[c], b = beta_.data[c];
        for (int n = 0; n < N; ++n) {
            const float* src = x.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            float* xh = xhat.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            float* dst = y.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            for (int i = 0; i < plane; ++i) {
                const float h = (src[i] - mu) * istd;
                xh[i] = h;
                dst[i] = g * h + b;
            }
        }
        running_mean_.data[c] = momentum_ * running_mean_.data[c] + (1.0f - momentum_) * mu;
        running_var_.data[c] =
            momentum_ * running_var_.data[c] + (1.0f - momentum_) * static_cast<float>(var);
    }
    if (ctx) {
        ctx->saved.clear();
        ctx->saved.push_back(std::move(xhat));
        ctx->saved.push_back(std::move(invstd));
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap& grads) {
    if (ctx.saved.size() != 2)
        throw Error(name_ + ": backward needs a train-mode tape");
    const Tensor& xhat = ctx.saved[0];
    const Tensor& invstd = ctx.saved[1];
    require_shape(grad_out, xhat.shape, name_ + ": grad_out");
    const int N = xhat.shape[0], H = xhat.shape[2], W = xhat.shape[3];
    const int plane = H * W;
    const double m = static_cast<double>(N) * plane;

    Tensor dgamma({channels_});
    Tensor dbeta({channels_});
    Tensor dx(xhat.shape);
    for (int c = 0; c < channels_; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int n = 0; n < N; ++n) {
            const float* g = grad_out.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            const float* xh = xhat.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            for (int i = 0; i < plane; ++i) {
                sum_g += g[i];
                sum_gx += static_cast<double>(g[i]) * xh[i];
            }
        }
        dgamma.data[c] = static_cast<float>(sum_gx);
        dbeta.data[c] = static_cast<float>(sum_g);
        const double coeff = static_cast<double>(gamma_.data[c]) * invstd.data[c] / m;
        for (int n = 0; n < N; ++n) {
            const float* g = grad_out.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            const float* xh = xhat.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            float* d = dx.ptr() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
            for (int i = 0; i < plane; ++i)
                d[i] = static_cast<float>(coeff * (m * g[i] - sum_g - xh[i] * sum_gx));
        }
    }
    grads.emplace("gamma", std::move(dgamma));
    grads.emplace("beta", std::move(dbeta));
    return dx;
}

// ---- pointwise layers ----

Tensor LeakyReLU::forward(const Tensor& x, Mode, LayerCtx* ctx) {
    Tensor y(x.shape);
    const float* src = x.ptr();
    float* dst = y.ptr();
    for (std::int64_t i = 0; i < x.numel(); ++i)
        dst[i] = src[i] > 0.0f ? src[i] : slope_ * src[i];
    (void)ctx;
    return y;
}

Tensor LeakyReLU::backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap&) {
    require_shape(grad_out, ctx.input.shape, name_ + ": grad_out");
    Tensor dx(ctx.input.shape);
    const float* x = ctx.input.ptr();
    const float* g = grad_out.ptr();
    float* d = dx.ptr();
    for (std::int64_t i = 0; i < dx.numel(); ++i) d[i] = x[i] > 0.0f ? g[i] : slope_ * g[i];
    return dx;
}

Tensor ReLU::forward(const Tensor& x, Mode, LayerCtx* ctx) {
    Tensor y(x.shape);
    const float* src = x.ptr();
    float* dst = y.ptr();
    for (std::int64_t i = 0; i < x.numel(); ++i) dst[i] = src[i] > 0.0f ? src[i] : 0.0f;
    (void)ctx;
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap&) {
    require_shape(grad_out, ctx.input.shape, name_ + ": grad_out");
    Tensor dx(ctx.input.shape);
    const float* x = ctx.input.ptr();
    const float* g = grad_out.ptr();
    float* d = dx.ptr();
    for (std::int64_t i = 0; i < dx.numel(); ++i) d[i] = x[i] > 0.0f ? g[i] : 0.0f;
    return dx;
}

Tensor Clip::forward(const Tensor& x, Mode, LayerCtx* ctx) {
    Tensor y(x.shape);
    const float* src = x.ptr();
    float* dst = y.ptr();
    for (std::int64_t i = 0; i < x.numel(); ++i)
        dst[i] = src[i] < lo_ ? lo_ : (src[i] > hi_ ? hi_ : src[i]);
    (void)ctx;
    return y;
}

Tensor Clip::backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap&) {
    require_shape(grad_out, ctx.input.shape, name_ + ": grad_out");
    Tensor dx(ctx.input.shape);
    const float* x = ctx.input.ptr();
    const float* g = grad_out.ptr();
    float* d = dx.ptr();
    for (std::int64_t i = 0; i < dx.numel(); ++i)
        d[i] = (x[i] > lo_ && x[i] < hi_) ? g[i] : 0.0f;
    return dx;
}

std::vector<int> Reshape::output_shape(const std::vector<int>& in) const {
    std::int64_t have = 1, want = 1;
    for (int e : in) have *= e;
    for (int e : sample_shape_) want *= e;
    if (have != want)
        throw ShapeError(name_ + ": cannot reshape per-sample " + Tensor::shape_str(in) + " to " +
                         Tensor::shape_str(sample_shape_));
    return sample_shape_;
}

Tensor Reshape::forward(const Tensor& x, Mode, LayerCtx* ctx) {
    std::vector<int> target;
    target.reserve(sample_shape_.size() + 1);
    target.push_back(x.shape[0]);
    target.insert(target.end(), sample_shape_.begin(), sample_shape_.end());
    (void)ctx;
    try {
        return x.reshaped(std::move(target));
    } catch (const ShapeError&) {
        throw ShapeError(name_ + ": cannot reshape batch " + Tensor::shape_str(x.shape) +
                         " to per-sample " + Tensor::shape_str(sample_shape_));
    }
}

Tensor Reshape::backward(const Tensor& grad_out, const LayerCtx& ctx, GradMap&) {
    if (grad_out.numel() != ctx.input.numel())
        throw ShapeError(name_ + ": grad_out element count mismatch");
    return grad_out.reshaped(ctx.input.shape);
}

} // namespace oled
