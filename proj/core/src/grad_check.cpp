#include "oled/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "oled/rng.hpp"

namespace oled {

namespace {

double weighted_sum(const Tensor& y, const std::vector<float>& c) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < y.numel(); ++i)
        acc += static_cast<double>(c[static_cast<std::size_t>(i)]) * y.data[static_cast<std::size_t>(i)];
    return acc;
}

GradCheckEntry compare(const std::string& name, const Tensor& analytic,
                       const std::vector<double>& numeric) {
    double max_diff = 0.0, max_mag = 0.0;
    for (std::int64_t i = 0; i < analytic.numel(); ++i) {
        const double a = analytic.data[static_cast<std::size_t>(i)];
        const double n = numeric[static_cast<std::size_t>(i)];
        max_diff = std::max(max_diff, std::abs(a - n));
        max_mag = std::max({max_mag, std::abs(a), std::abs(n)});
    }
    const double rel = max_diff / std::max(max_mag, 1e-2);
    return {name, max_diff, rel};
}

} // namespace

GradCheckReport grad_check(LayerStack& stack, const Tensor& x, std::uint64_t seed, double h) {
    Tape tape;
    Tensor y = stack.forward(x, Mode::Train, &tape);

    Rng rng(seed);
    std::vector<float> c(static_cast<std::size_t>(y.numel()));
    for (float& v : c) v = rng.uniform(-1.0f, 1.0f);

    Tensor grad_out(y.shape, c);
    GradMap grads;
    Tensor grad_in = stack.backward(tape, grad_out, grads);

    GradCheckReport report;
    auto probe = [&](Tensor& target, const Tensor& analytic, const std::string& name) {
        std::vector<double> numeric(static_cast<std::size_t>(target.numel()));
        for (std::int64_t i = 0; i < target.numel(); ++i) {
            const std::size_t idx = static_cast<std::size_t>(i);
            const float orig = target.data[idx];
            target.data[idx] = orig + static_cast<float>(h);
            const double lp = weighted_sum(stack.forward(x, Mode::Train, nullptr), c);
            target.data[idx] = orig - static_cast<float>(h);
            const double lm = weighted_sum(stack.forward(x, Mode::Train, nullptr), c);
            target.data[idx] = orig;
            numeric[idx] = (lp - lm) / (2.0 * h);
        }
        report.entries.push_back(compare(name, analytic, numeric));
    };

    for (const ParamRef& p : stack.parameters()) {
        if (!p.trainable) continue;
        probe(*p.value, grads.at(p.name), p.name);
    }
    Tensor input = x;
    {
        std::vector<double> numeric(static_cast<std::size_t>(input.numel()));
        for (std::int64_t i = 0; i < input.numel(); ++i) {
            const std::size_t idx = static_cast<std::size_t>(i);
            const float orig = input.data[idx];
            input.data[idx] = orig + static_cast<float>(h);
            const double lp = weighted_sum(stack.forward(input, Mode::Train, nullptr), c);
            input.data[idx] = orig - static_cast<float>(h);
            const double lm = weighted_sum(stack.forward(input, Mode::Train, nullptr), c);
            input.data[idx] = orig;
            numeric[idx] = (lp - lm) / (2.0 * h);
        }
        report.entries.push_back(compare("(input)", grad_in, numeric));
    }

    for (const GradCheckEntry& e : report.entries)
        report.max_rel_err = std::max(report.max_rel_err, e.rel_err);
    return report;
}

} // namespace oled
