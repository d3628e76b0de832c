#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace oled {

/// Deterministic random source. Wraps std::mt19937_64 (whose output sequence
/// is fixed by the standard) and maps raw words to floats/indices with
/// explicit arithmetic, so identical seeds give bit-identical streams on any
/// platform. std::uniform_real_distribution and friends are deliberately
/// avoided: their mappings are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform float in [0, 1) with 24-bit resolution.
    float uniform() {
        return static_cast<float>(gen_() >> 40) * (1.0f / 16777216.0f);
    }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform_double() {
        return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
    }

    /// Uniform index in [0, n). Rejection sampling keeps it exactly uniform.
    std::size_t index(std::size_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return static_cast<std::size_t>(v % n);
    }

    /// Fisher-Yates shuffle with a fully specified draw order.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

} // namespace oled
