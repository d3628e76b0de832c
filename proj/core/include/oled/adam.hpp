#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "oled/layers.hpp"
#include "oled/tensor.hpp"

namespace oled {

struct AdamConfig {
    float lr = 5e-4f;
    float b1 = 0.5f;
    float b2 = 0.9f;
    float eps = 1e-8f;
};

/// Adam with bias correction. Moment tensors are allocated lazily per
/// parameter name on the first step; the step counter advances once per
/// step() call.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    /// One update over all trainable parameters:
    ///   p -= lr * m_hat / (sqrt(v_hat) + eps)
    /// Throws NumericError on a non-finite gradient so training aborts
    /// before corrupting parameters or moments.
    void step(const std::vector<ParamRef>& params, const GradMap& grads);

    std::int64_t t() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

} // namespace oled
