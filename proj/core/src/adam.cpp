#include "oled/adam.hpp"

#include <cmath>

namespace oled {

void Adam::step(const std::vector<ParamRef>& params, const GradMap& grads) {
    ++t_;
    const float bc1 = 1.0f - std::pow(cfg_.b1, static_cast<float>(t_));
    const float bc2 = 1.0f - std::pow(cfg_.b2, static_cast<float>(t_));
    for (const ParamRef& p : params) {
        if (!p.trainable) continue;
        auto git = grads.find(p.name);
        if (git == grads.end()) continue;
        const Tensor& g = git->second;
        if (!g.same_shape(*p.value))
            throw ShapeError("adam: gradient shape mismatch for '" + p.name + "'");
        if (!g.all_finite())
            throw NumericError("adam: non-finite gradient for '" + p.name + "'");

        auto mit = m_.find(p.name);
        if (mit == m_.end()) {
            mit = m_.emplace(p.name, Tensor::zeros(p.value->shape)).first;
            v_.emplace(p.name, Tensor::zeros(p.value->shape));
        }
        Tensor& m = mit->second;
        Tensor& v = v_.at(p.name);
        float* mp = m.ptr();
        float* vp = v.ptr();
        float* w = p.value->ptr();
        const float* gp = g.ptr();
        for (std::int64_t i = 0; i < g.numel(); ++i) {
            mp[i] = cfg_.b1 * mp[i] + (1.0f - cfg_.b1) * gp[i];
            vp[i] = cfg_.b2 * vp[i] + (1.0f - cfg_.b2) * gp[i] * gp[i];
            const float mhat = mp[i] / bc1;
            const float vhat = vp[i] / bc2;
            w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

} // namespace oled
