#pragma once

#include <string>
#include <vector>

#include "oled/layers.hpp"

namespace oled {

struct GradCheckEntry {
    std::string param; // parameter name, or "(input)" for the stack input
    double max_abs_diff;
    double rel_err;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err = 0.0;
    bool pass(double tol) const { return max_rel_err < tol; }
};

/// Compares the analytic backward pass against central finite differences on
/// the scalar loss L(y) = sum_i c_i * y_i with fixed random coefficients c.
/// The numeric side evaluates the float forward but differences in 64-bit.
/// Per parameter, rel_err is the max absolute disagreement divided by the
/// larger gradient magnitude in that tensor (floored to dodge 0/0 noise).
/// Intended for small stacks; cost is two forwards per scalar parameter.
GradCheckReport grad_check(LayerStack& stack, const Tensor& x, std::uint64_t seed,
                           double h = 1e-3);

} // namespace oled
