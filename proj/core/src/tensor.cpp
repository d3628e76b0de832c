#include "oled/tensor.hpp"

#include <cmath>
#include <sstream>

namespace oled {

std::int64_t Tensor::checked_numel(const std::vector<int>& s) {
    if (s.empty()) throw ShapeError("tensor shape must have at least one extent");
    std::int64_t n = 1;
    for (int e : s) {
        if (e <= 0) throw ShapeError("tensor extent must be positive, got " + shape_str(s));
        n *= e;
    }
    return n;
}

std::string Tensor::shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ',';
        os << s[i];
    }
    os << ']';
    return os.str();
}

bool Tensor::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void require_shape(const Tensor& t, const std::vector<int>& shape, const std::string& what) {
    if (t.shape != shape)
        throw ShapeError(what + ": expected shape " + Tensor::shape_str(shape) + ", got " +
                         Tensor::shape_str(t.shape));
}

void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw NumericError(what + ": non-finite values");
}

} // namespace oled
