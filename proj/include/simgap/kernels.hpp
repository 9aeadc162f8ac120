#pragma once

#include <algorithm>
#include <cstddef>
#include <span>

namespace simgap::kernels {

// Dot product of two f32 rows accumulated in f64. The 16-way lane split gives
// the compiler two independent vector accumulators; the lane reduction order
// is fixed, so a given pair of rows always produces the same bits regardless
// of chunking, tiling, or thread count.
inline double dot_accumulate(const float* a, const float* b, std::size_t n) {
    double acc0[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    double acc1[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        for (int j = 0; j < 8; ++j)
            acc0[j] += static_cast<double>(a[i + j]) * static_cast<double>(b[i + j]);
        for (int j = 0; j < 8; ++j)
            acc1[j] += static_cast<double>(a[i + 8 + j]) * static_cast<double>(b[i + 8 + j]);
    }
    for (; i + 8 <= n; i += 8) {
        for (int j = 0; j < 8; ++j)
            acc0[j] += static_cast<double>(a[i + j]) * static_cast<double>(b[i + j]);
    }
    double lane[8];
    for (int j = 0; j < 8; ++j) lane[j] = acc0[j] + acc1[j];
    double sum = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
                 ((lane[4] + lane[5]) + (lane[6] + lane[7]));
    for (; i < n; ++i)
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

// Same accumulation on rows already widened to f64. Conversion is exact, and
// the lane structure matches dot_accumulate bit for bit, so the two entry
// points are interchangeable pair-wise. The widened form lets hot loops hoist
// all conversions out of the scan.
inline double dot_accumulate_pre(const double* a, const double* b,
                                 std::size_t n) {
    double acc0[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    double acc1[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        for (int j = 0; j < 8; ++j) acc0[j] += a[i + j] * b[i + j];
        for (int j = 0; j < 8; ++j) acc1[j] += a[i + 8 + j] * b[i + 8 + j];
    }
    for (; i + 8 <= n; i += 8) {
        for (int j = 0; j < 8; ++j) acc0[j] += a[i + j] * b[i + j];
    }
    double lane[8];
    for (int j = 0; j < 8; ++j) lane[j] = acc0[j] + acc1[j];
    double sum = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
                 ((lane[4] + lane[5]) + (lane[6] + lane[7]));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

inline void widen_rows(const float* rows, std::size_t count, double* out) {
    for (std::size_t i = 0; i < count; ++i)
        out[i] = static_cast<double>(rows[i]);
}

// f32 rounding can push a self-match a hair past 1.
inline float similarity_from_dot(double dot) {
    return static_cast<float>(std::clamp(dot, -1.0, 1.0));
}

// Checked public form; inputs are expected to be unit rows.
float cosine_similarity(std::span<const float> a, std::span<const float> b);

// Serial reference: single accumulator, no lane splitting. Kept for tests and
// the kernel benchmark; deliberately not shared with the production path.
inline double dot_reference(const float* a, const float* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

} // namespace simgap::kernels
