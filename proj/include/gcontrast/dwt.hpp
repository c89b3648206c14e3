#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gcontrast/errors.hpp"

namespace gcontrast {

// Single-level orthogonal Haar filter bank. Odd-length inputs are extended by
// replicating the last sample before analysis; the caller passes the original
// length back to idwt_haar so the pad is dropped on synthesis.

template <typename T>
struct HaarCoeffs {
    std::vector<T> approx;
    std::vector<T> detail;
};

template <typename T>
HaarCoeffs<T> dwt_haar(std::span<const T> x) {
    const std::size_t m = x.size();
    if (m < 2) {
        throw ValidationError("dwt_haar: signal length must be >= 2, got " + std::to_string(m));
    }
    const std::size_t pairs = (m + 1) / 2;
    const T inv_sqrt2 = static_cast<T>(1.0 / 1.41421356237309514547462185873882845);
    HaarCoeffs<T> c;
    c.approx.resize(pairs);
    c.detail.resize(pairs);
    for (std::size_t t = 0; t < pairs; ++t) {
        const T a = x[2 * t];
        const T b = (2 * t + 1 < m) ? x[2 * t + 1] : x[m - 1];
        c.approx[t] = (a + b) * inv_sqrt2;
        c.detail[t] = (a - b) * inv_sqrt2;
    }
    return c;
}

template <typename T>
std::vector<T> idwt_haar(std::span<const T> approx, std::span<const T> detail,
                         std::size_t original_length) {
    if (approx.size() != detail.size()) {
        throw ShapeError("idwt_haar: approximation and detail lengths differ (" +
                         std::to_string(approx.size()) + " vs " + std::to_string(detail.size()) + ")");
    }
    const std::size_t pairs = approx.size();
    if (original_length != 2 * pairs && original_length + 1 != 2 * pairs) {
        throw ShapeError("idwt_haar: original length " + std::to_string(original_length) +
                         " does not match " + std::to_string(pairs) + " coefficient pairs");
    }
    const T inv_sqrt2 = static_cast<T>(1.0 / 1.41421356237309514547462185873882845);
    std::vector<T> x(original_length);
    for (std::size_t t = 0; t < pairs; ++t) {
        const T lo = (approx[t] + detail[t]) * inv_sqrt2;
        const T hi = (approx[t] - detail[t]) * inv_sqrt2;
        x[2 * t] = lo;
        if (2 * t + 1 < original_length) x[2 * t + 1] = hi;
    }
    return x;
}

}  // namespace gcontrast
