#include "evcalib/simd/kernels.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

using namespace evcalib::simd;

namespace {

const std::size_t kSizes[] = {0, 1, 3, 4, 7, 8, 9, 15, 16, 17, 31, 64, 100, 257, 640};

std::vector<float> random_floats(std::mt19937& rng, std::size_t n, float lo, float hi) {
    std::uniform_real_distribution<float> u(lo, hi);
    std::vector<float> v(n);
    for (float& x : v) x = u(rng);
    return v;
}

std::vector<double> random_doubles(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

template <class T>
void expect_bitwise(const std::vector<T>& a, const std::vector<T>& b) {
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(T)), 0);
}

class Avx2Equivalence : public ::testing::Test {
protected:
    void SetUp() override {
        if (avx2_kernels() == nullptr) GTEST_SKIP() << "AVX2 kernels unavailable on this machine";
    }
    const KernelTable& s = scalar_kernels();
    const KernelTable& v() const { return *avx2_kernels(); }
    std::mt19937 rng{42};
};

}  // namespace

TEST(ScalarKernels, CombineMaskMatchesDefinition) {
    const float ts[] = {0.9f, 0.01f, 0.9f, 0.5f};
    const std::uint8_t tos[] = {255, 255, 150, 241};
    float out[4];
    scalar_kernels().combine_mask(ts, tos, 4, 0.1f, 200, out);
    EXPECT_EQ(out[0], 1.0f);
    EXPECT_EQ(out[1], 0.0f);
    EXPECT_EQ(out[2], 0.0f);
    EXPECT_EQ(out[3], 241.0f / 255.0f);
}

TEST(ScalarKernels, BoxRowClampsAtBorders) {
    const float in[] = {1, 2, 3, 4};
    float out[4];
    scalar_kernels().box_row(in, 4, 1, out);
    EXPECT_EQ(out[0], 1 + 1 + 2);
    EXPECT_EQ(out[1], 1 + 2 + 3);
    EXPECT_EQ(out[3], 3 + 4 + 4);
}

TEST(ScalarKernels, HammingCountsBits) {
    Descriptor256 q, d[2];
    q.words[0] = 0xFFull;
    d[0].words[0] = 0x0Full;
    d[1].words[3] = ~0ull;
    std::uint32_t out[2];
    scalar_kernels().hamming256(q, d, 2, out);
    EXPECT_EQ(out[0], 4u);
    EXPECT_EQ(out[1], 8u + 64u);
}

TEST(ScalarKernels, CenteredMomentsMatchLoop) {
    std::mt19937 rng(7);
    const std::size_t n = 37;
    auto ax = random_doubles(rng, n), ay = random_doubles(rng, n), az = random_doubles(rng, n);
    auto bx = random_doubles(rng, n), by = random_doubles(rng, n), bz = random_doubles(rng, n);
    const double ma[3] = {0.1, -0.2, 0.3}, mb[3] = {0.0, 0.05, -0.1};
    double out[9];
    scalar_kernels().centered_moments({ax.data(), ay.data(), az.data()}, {bx.data(), by.data(), bz.data()}, n, ma, mb,
                                      out);
    const std::vector<double>* a[3] = {&ax, &ay, &az};
    const std::vector<double>* b[3] = {&bx, &by, &bz};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double ref = 0.0;
            for (std::size_t i = 0; i < n; ++i) ref += ((*a[r])[i] - ma[r]) * ((*b[c])[i] - mb[c]);
            EXPECT_NEAR(out[3 * r + c], ref, 1e-12);
        }
}

TEST(Dispatch, ActiveTableIsKnown) {
    const auto& k = active_kernels();
    EXPECT_TRUE(k.name == "scalar" || k.name == "avx2");
}

TEST_F(Avx2Equivalence, CombineMask) {
    for (std::size_t n : kSizes) {
        auto ts = random_floats(rng, n, 0.0f, 1.0f);
        std::vector<std::uint8_t> tos(n);
        for (auto& t : tos) t = static_cast<std::uint8_t>(rng() & 0xFF);
        std::vector<float> a(n), b(n);
        s.combine_mask(ts.data(), tos.data(), n, 0.1f, 241, a.data());
        v().combine_mask(ts.data(), tos.data(), n, 0.1f, 241, b.data());
        expect_bitwise(a, b);
    }
}

TEST_F(Avx2Equivalence, GradientRow) {
    for (std::size_t n : kSizes) {
        if (n == 0) continue;
        auto up = random_floats(rng, n, 0, 1), row = random_floats(rng, n, 0, 1), down = random_floats(rng, n, 0, 1);
        std::vector<float> gx1(n), gy1(n), gx2(n), gy2(n);
        s.gradient_row(up.data(), row.data(), down.data(), n, gx1.data(), gy1.data());
        v().gradient_row(up.data(), row.data(), down.data(), n, gx2.data(), gy2.data());
        expect_bitwise(gx1, gx2);
        expect_bitwise(gy1, gy2);
    }
}

TEST_F(Avx2Equivalence, BoxRow) {
    for (std::size_t n : kSizes)
        for (int r : {0, 1, 2, 5}) {
            auto in = random_floats(rng, n, -1, 1);
            std::vector<float> a(n), b(n);
            s.box_row(in.data(), n, r, a.data());
            v().box_row(in.data(), n, r, b.data());
            expect_bitwise(a, b);
        }
}

TEST_F(Avx2Equivalence, AccumulateAndProducts) {
    for (std::size_t n : kSizes) {
        auto gx = random_floats(rng, n, -1, 1), gy = random_floats(rng, n, -1, 1);
        std::vector<float> acc1 = random_floats(rng, n, 0, 1), acc2 = acc1;
        s.accumulate(gx.data(), n, acc1.data());
        v().accumulate(gx.data(), n, acc2.data());
        expect_bitwise(acc1, acc2);

        std::vector<float> xx1(n), yy1(n), xy1(n), xx2(n), yy2(n), xy2(n);
        s.structure_products(gx.data(), gy.data(), n, xx1.data(), yy1.data(), xy1.data());
        v().structure_products(gx.data(), gy.data(), n, xx2.data(), yy2.data(), xy2.data());
        expect_bitwise(xx1, xx2);
        expect_bitwise(yy1, yy2);
        expect_bitwise(xy1, xy2);

        std::vector<float> h1(n), h2(n);
        s.harris_response(xx1.data(), yy1.data(), xy1.data(), n, 0.04f, h1.data());
        v().harris_response(xx1.data(), yy1.data(), xy1.data(), n, 0.04f, h2.data());
        expect_bitwise(h1, h2);
    }
}

TEST_F(Avx2Equivalence, Hamming) {
    for (std::size_t n : kSizes) {
        std::vector<Descriptor256> db(n);
        std::mt19937_64 r64(n);
        for (auto& d : db)
            for (auto& w : d.words) w = r64();
        Descriptor256 q;
        for (auto& w : q.words) w = r64();
        std::vector<std::uint32_t> a(n), b(n);
        s.hamming256(q, db.data(), n, a.data());
        v().hamming256(q, db.data(), n, b.data());
        expect_bitwise(a, b);
        for (std::size_t i = 0; i < n; ++i) {
            unsigned ref = 0;
            for (int k = 0; k < 4; ++k) ref += std::popcount(q.words[k] ^ db[i].words[k]);
            EXPECT_EQ(a[i], ref);
        }
    }
}

TEST_F(Avx2Equivalence, Moments) {
    for (std::size_t n : kSizes) {
        auto ax = random_doubles(rng, n), ay = random_doubles(rng, n), az = random_doubles(rng, n);
        auto bx = random_doubles(rng, n), by = random_doubles(rng, n), bz = random_doubles(rng, n);
        const SoA3 a{ax.data(), ay.data(), az.data()}, b{bx.data(), by.data(), bz.data()};
        std::vector<double> s1(3), s2(3);
        s.sum3(a, n, s1.data());
        v().sum3(a, n, s2.data());
        expect_bitwise(s1, s2);
        const double ma[3] = {0.01, 0.02, -0.03}, mb[3] = {-0.2, 0.1, 0.0};
        std::vector<double> m1(9), m2(9);
        s.centered_moments(a, b, n, ma, mb, m1.data());
        v().centered_moments(a, b, n, ma, mb, m2.data());
        expect_bitwise(m1, m2);
    }
}
