#pragma once

// Data-parallel inner loops shared by the representation, feature and
// covariance code. Every kernel has a scalar reference implementation and,
// on x86-64, an AVX2 variant. Both variants produce bit-identical results:
// floating-point kernels evaluate the same operations in the same order
// (the build disables FMA contraction), and reductions use the same
// four-lane partial-sum layout in both paths.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace evcalib::simd {

/// 256-bit binary descriptor.
struct Descriptor256 {
    std::uint64_t words[4] = {0, 0, 0, 0};
};

/// Sums of centered products between two 3-D point sets stored as
/// structure-of-arrays: out[3*r + c] = sum_i (a_r[i] - mean_a[r]) * (b_c[i] - mean_b[c]).
struct SoA3 {
    const double* x;
    const double* y;
    const double* z;
};

struct KernelTable {
    std::string_view name;

    /// out[i] = (ts[i] > ts_threshold && tos[i] >= tos_threshold) ? tos[i] / 255 : 0
    void (*combine_mask)(const float* ts, const std::uint8_t* tos, std::size_t n, float ts_threshold,
                         int tos_threshold, float* out);

    /// Central-difference gradients of one row; `up`/`down` are the rows above
    /// and below (clamped at the image border by the caller). Border columns
    /// use one-sided clamping: x-1 -> 0 and x+1 -> width-1.
    void (*gradient_row)(const float* up, const float* row, const float* down, std::size_t width,
                         float* gx, float* gy);

    /// out[i] = sum_{k=-r..r} in[clamp(i+k)] over a row of length n.
    void (*box_row)(const float* in, std::size_t n, int radius, float* out);

    /// acc[i] += in[i]
    void (*accumulate)(const float* in, std::size_t n, float* acc);

    /// xx = gx*gx, yy = gy*gy, xy = gx*gy
    void (*structure_products)(const float* gx, const float* gy, std::size_t n, float* xx, float* yy,
                               float* xy);

    /// out[i] = (xx*yy - xy*xy) - k*(xx+yy)*(xx+yy)
    void (*harris_response)(const float* xx, const float* yy, const float* xy, std::size_t n, float k,
                            float* out);

    /// out[i] = popcount(query ^ db[i])
    void (*hamming256)(const Descriptor256& query, const Descriptor256* db, std::size_t n,
                       std::uint32_t* out);

    /// Sum of the three coordinates: out = {sum x, sum y, sum z}.
    void (*sum3)(SoA3 a, std::size_t n, double* out);

    /// Centered cross-moment sums (3x3 row-major into out[9]).
    void (*centered_moments)(SoA3 a, SoA3 b, std::size_t n, const double* mean_a, const double* mean_b,
                             double* out);
};

const KernelTable& scalar_kernels();

/// AVX2 kernels, or nullptr when not compiled in or unsupported by the CPU.
const KernelTable* avx2_kernels();

/// The table used by the library: AVX2 when available unless the environment
/// variable EVCALIB_SIMD=scalar forces the reference path.
const KernelTable& active_kernels();

}  // namespace evcalib::simd
