#include "evcalib/simd/kernels.hpp"

#include <algorithm>
#include <bit>

namespace evcalib::simd {
namespace {

void combine_mask(const float* ts, const std::uint8_t* tos, std::size_t n, float ts_threshold,
                  int tos_threshold, float* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const bool keep = ts[i] > ts_threshold && static_cast<int>(tos[i]) >= tos_threshold;
        out[i] = keep ? static_cast<float>(tos[i]) / 255.0f : 0.0f;
    }
}

void gradient_row(const float* up, const float* row, const float* down, std::size_t width, float* gx,
                  float* gy) {
    if (width == 0) return;
    for (std::size_t x = 0; x < width; ++x) {
        const std::size_t xl = x == 0 ? 0 : x - 1;
        const std::size_t xr = x + 1 == width ? width - 1 : x + 1;
        gx[x] = (row[xr] - row[xl]) * 0.5f;
        gy[x] = (down[x] - up[x]) * 0.5f;
    }
}

void box_row(const float* in, std::size_t n, int radius, float* out) {
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::ptrdiff_t>(i);
        float acc = in[std::clamp<std::ptrdiff_t>(c - radius, 0, last)];
        for (int k = -radius + 1; k <= radius; ++k) acc += in[std::clamp<std::ptrdiff_t>(c + k, 0, last)];
        out[i] = acc;
    }
}

void accumulate(const float* in, std::size_t n, float* acc) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += in[i];
}

void structure_products(const float* gx, const float* gy, std::size_t n, float* xx, float* yy, float* xy) {
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = gx[i] * gx[i];
        yy[i] = gy[i] * gy[i];
        xy[i] = gx[i] * gy[i];
    }
}

void harris_response(const float* xx, const float* yy, const float* xy, std::size_t n, float k, float* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const float det = xx[i] * yy[i] - xy[i] * xy[i];
        const float tr = xx[i] + yy[i];
        out[i] = det - (k * tr) * tr;
    }
}

void hamming256(const Descriptor256& q, const Descriptor256* db, std::size_t n, std::uint32_t* out) {
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t d = 0;
        for (int w = 0; w < 4; ++w) d += static_cast<std::uint32_t>(std::popcount(q.words[w] ^ db[i].words[w]));
        out[i] = d;
    }
}

// Reductions keep four partial sums indexed by i % 4 and combine them as
// (l0 + l1) + (l2 + l3), matching the AVX2 lane layout.
void sum3(SoA3 a, std::size_t n, double* out) {
    const double* cols[3] = {a.x, a.y, a.z};
    for (int c = 0; c < 3; ++c) {
        double lane[4] = {0.0, 0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) lane[i & 3] += cols[c][i];
        out[c] = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    }
}

void centered_moments(SoA3 a, SoA3 b, std::size_t n, const double* mean_a, const double* mean_b, double* out) {
    const double* ac[3] = {a.x, a.y, a.z};
    const double* bc[3] = {b.x, b.y, b.z};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double lane[4] = {0.0, 0.0, 0.0, 0.0};
            for (std::size_t i = 0; i < n; ++i) {
                const double da = ac[r][i] - mean_a[r];
                const double db = bc[c][i] - mean_b[c];
                lane[i & 3] += da * db;
            }
            out[3 * r + c] = (lane[0] + lane[1]) + (lane[2] + lane[3]);
        }
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar",           combine_mask,    gradient_row, box_row,
                                   accumulate,         structure_products, harris_response,
                                   hamming256,         sum3,            centered_moments};
    return table;
}

}  // namespace evcalib::simd
