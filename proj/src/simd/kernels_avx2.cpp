#include "evcalib/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace evcalib::simd {
namespace {

void combine_mask(const float* ts, const std::uint8_t* tos, std::size_t n, float ts_threshold,
                  int tos_threshold, float* out) {
    const __m256 thr = _mm256_set1_ps(ts_threshold);
    const __m256i tos_floor = _mm256_set1_epi32(tos_threshold - 1);
    const __m256 scale = _mm256_set1_ps(255.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 ts8 = _mm256_loadu_ps(ts + i);
        const __m256 recent = _mm256_cmp_ps(ts8, thr, _CMP_GT_OQ);
        const __m128i bytes = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(tos + i));
        const __m256i ord = _mm256_cvtepu8_epi32(bytes);
        const __m256 high = _mm256_castsi256_ps(_mm256_cmpgt_epi32(ord, tos_floor));
        const __m256 value = _mm256_div_ps(_mm256_cvtepi32_ps(ord), scale);
        _mm256_storeu_ps(out + i, _mm256_and_ps(_mm256_and_ps(recent, high), value));
    }
    for (; i < n; ++i) {
        const bool keep = ts[i] > ts_threshold && static_cast<int>(tos[i]) >= tos_threshold;
        out[i] = keep ? static_cast<float>(tos[i]) / 255.0f : 0.0f;
    }
}

void gradient_row(const float* up, const float* row, const float* down, std::size_t width, float* gx,
                  float* gy) {
    if (width == 0) return;
    const __m256 half = _mm256_set1_ps(0.5f);
    std::size_t x = 0;
    for (; x + 8 <= width; x += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(down + x), _mm256_loadu_ps(up + x));
        _mm256_storeu_ps(gy + x, _mm256_mul_ps(d, half));
    }
    for (; x < width; ++x) gy[x] = (down[x] - up[x]) * 0.5f;

    if (width < 3) {
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t xl = c == 0 ? 0 : c - 1;
            const std::size_t xr = c + 1 == width ? width - 1 : c + 1;
            gx[c] = (row[xr] - row[xl]) * 0.5f;
        }
        return;
    }
    gx[0] = (row[1] - row[0]) * 0.5f;
    x = 1;
    for (; x + 8 <= width - 1; x += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(row + x + 1), _mm256_loadu_ps(row + x - 1));
        _mm256_storeu_ps(gx + x, _mm256_mul_ps(d, half));
    }
    for (; x < width - 1; ++x) gx[x] = (row[x + 1] - row[x - 1]) * 0.5f;
    gx[width - 1] = (row[width - 1] - row[width - 2]) * 0.5f;
}

void box_row(const float* in, std::size_t n, int radius, float* out) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    const auto last = sn - 1;
    auto scalar_at = [&](std::ptrdiff_t c) {
        float acc = in[std::clamp<std::ptrdiff_t>(c - radius, 0, last)];
        for (int k = -radius + 1; k <= radius; ++k) acc += in[std::clamp<std::ptrdiff_t>(c + k, 0, last)];
        out[c] = acc;
    };
    std::ptrdiff_t i = 0;
    for (; i < std::min<std::ptrdiff_t>(radius, sn); ++i) scalar_at(i);
    for (; i + 8 + radius <= sn; i += 8) {
        __m256 acc = _mm256_loadu_ps(in + i - radius);
        for (int k = -radius + 1; k <= radius; ++k) acc = _mm256_add_ps(acc, _mm256_loadu_ps(in + i + k));
        _mm256_storeu_ps(out + i, acc);
    }
    for (; i < sn; ++i) scalar_at(i);
}

void accumulate(const float* in, std::size_t n, float* acc) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), _mm256_loadu_ps(in + i)));
    for (; i < n; ++i) acc[i] += in[i];
}

void structure_products(const float* gx, const float* gy, std::size_t n, float* xx, float* yy, float* xy) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 a = _mm256_loadu_ps(gx + i);
        const __m256 b = _mm256_loadu_ps(gy + i);
        _mm256_storeu_ps(xx + i, _mm256_mul_ps(a, a));
        _mm256_storeu_ps(yy + i, _mm256_mul_ps(b, b));
        _mm256_storeu_ps(xy + i, _mm256_mul_ps(a, b));
    }
    for (; i < n; ++i) {
        xx[i] = gx[i] * gx[i];
        yy[i] = gy[i] * gy[i];
        xy[i] = gx[i] * gy[i];
    }
}

void harris_response(const float* xx, const float* yy, const float* xy, std::size_t n, float k, float* out) {
    const __m256 kk = _mm256_set1_ps(k);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 a = _mm256_loadu_ps(xx + i);
        const __m256 b = _mm256_loadu_ps(yy + i);
        const __m256 c = _mm256_loadu_ps(xy + i);
        const __m256 det = _mm256_sub_ps(_mm256_mul_ps(a, b), _mm256_mul_ps(c, c));
        const __m256 tr = _mm256_add_ps(a, b);
        _mm256_storeu_ps(out + i, _mm256_sub_ps(det, _mm256_mul_ps(_mm256_mul_ps(kk, tr), tr)));
    }
    for (; i < n; ++i) {
        const float det = xx[i] * yy[i] - xy[i] * xy[i];
        const float tr = xx[i] + yy[i];
        out[i] = det - (k * tr) * tr;
    }
}

void hamming256(const Descriptor256& q, const Descriptor256* db, std::size_t n, std::uint32_t* out) {
    const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4, 0, 1, 1, 2, 1, 2, 2, 3,
                                         1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low_nibble = _mm256_set1_epi8(0x0f);
    const __m256i query = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(q.words));
    for (std::size_t i = 0; i < n; ++i) {
        const __m256i x = _mm256_xor_si256(query, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(db[i].words)));
        const __m256i lo = _mm256_and_si256(x, low_nibble);
        const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(x, 4), low_nibble);
        const __m256i cnt = _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
        const __m256i sad = _mm256_sad_epu8(cnt, _mm256_setzero_si256());
        const __m128i s = _mm_add_epi64(_mm256_castsi256_si128(sad), _mm256_extracti128_si256(sad, 1));
        out[i] = static_cast<std::uint32_t>(_mm_cvtsi128_si64(s) + _mm_extract_epi64(s, 1));
    }
}

void sum3(SoA3 a, std::size_t n, double* out) {
    const double* cols[3] = {a.x, a.y, a.z};
    const std::size_t full = n & ~std::size_t{3};
    for (int c = 0; c < 3; ++c) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t i = 0; i < full; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(cols[c] + i));
        alignas(32) double lane[4];
        _mm256_store_pd(lane, acc);
        for (std::size_t i = full; i < n; ++i) lane[i & 3] += cols[c][i];
        out[c] = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    }
}

void centered_moments(SoA3 a, SoA3 b, std::size_t n, const double* mean_a, const double* mean_b, double* out) {
    const double* ac[3] = {a.x, a.y, a.z};
    const double* bc[3] = {b.x, b.y, b.z};
    const std::size_t full = n & ~std::size_t{3};
    for (int r = 0; r < 3; ++r) {
        const __m256d ma = _mm256_set1_pd(mean_a[r]);
        for (int c = 0; c < 3; ++c) {
            const __m256d mb = _mm256_set1_pd(mean_b[c]);
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t i = 0; i < full; i += 4) {
                const __m256d da = _mm256_sub_pd(_mm256_loadu_pd(ac[r] + i), ma);
                const __m256d db = _mm256_sub_pd(_mm256_loadu_pd(bc[c] + i), mb);
                acc = _mm256_add_pd(acc, _mm256_mul_pd(da, db));
            }
            alignas(32) double lane[4];
            _mm256_store_pd(lane, acc);
            for (std::size_t i = full; i < n; ++i) {
                const double da = ac[r][i] - mean_a[r];
                const double db = bc[c][i] - mean_b[c];
                lane[i & 3] += da * db;
            }
            out[3 * r + c] = (lane[0] + lane[1]) + (lane[2] + lane[3]);
        }
    }
}

}  // namespace

const KernelTable& avx2_kernel_table() {
    static const KernelTable table{"avx2",     combine_mask,       gradient_row,    box_row,
                                   accumulate, structure_products, harris_response, hamming256,
                                   sum3,       centered_moments};
    return table;
}

}  // namespace evcalib::simd
