#include "duprg/matrix.hpp"

#include <cmath>
#include <limits>

namespace duprg {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// sqrt(aa * bb) rather than |a| * |b| so that cosine(a, a) == 1 exactly.
double cosine(std::span<const double> a, std::span<const double> b) {
    const double aa = dot(a, a);
    const double bb = dot(b, b);
    if (aa == 0.0 || bb == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return dot(a, b) / std::sqrt(aa * bb);
}

bool all_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

} // namespace duprg
