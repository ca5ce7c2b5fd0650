#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "chestnet/kernels.hpp"
#include "chestnet/rng.hpp"

using namespace chestnet;
using namespace chestnet::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng) {
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

void expect_close(const std::vector<float>& a, const std::vector<float>& b, float tol) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_NEAR(a[i], b[i], tol * (1.0f + std::abs(a[i]))) << "at " << i;
    }
}

class Avx2Kernels : public ::testing::Test {
protected:
    void SetUp() override {
        fast = avx2_table();
        if (!fast) GTEST_SKIP() << "AVX2 variant unavailable on this machine";
    }
    const KernelTable<float>* fast = nullptr;
    const KernelTable<float>& ref = scalar_table<float>();
};

}  // namespace

TEST(KernelsScalar, GemmMatchesTripleLoop) {
    Rng rng(3);
    const std::size_t m = 5, n = 7, k = 4;
    auto a = random_vec(m * k, rng), b = random_vec(k * n, rng);
    std::vector<double> ad(a.begin(), a.end()), bd(b.begin(), b.end());
    std::vector<double> c(m * n, 1.0);
    scalar_table<double>().gemm(false, false, m, n, k, ad.data(), k, bd.data(), n, 2.0, c.data(), n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 2.0;
            for (std::size_t p = 0; p < k; ++p) acc += ad[i * k + p] * bd[p * n + j];
            EXPECT_NEAR(c[i * n + j], acc, 1e-12);
        }
}

TEST(KernelsScalar, GemmTransposesAgree) {
    Rng rng(4);
    const std::size_t m = 6, n = 3, k = 5;
    auto a = random_vec(m * k, rng), b = random_vec(k * n, rng);
    std::vector<float> at(k * m), bt(n * k);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
    const auto& t = scalar_table<float>();
    std::vector<float> c0(m * n), c1(m * n), c2(m * n), c3(m * n);
    t.gemm(false, false, m, n, k, a.data(), k, b.data(), n, 0.0f, c0.data(), n);
    t.gemm(true, false, m, n, k, at.data(), m, b.data(), n, 0.0f, c1.data(), n);
    t.gemm(false, true, m, n, k, a.data(), k, bt.data(), k, 0.0f, c2.data(), n);
    t.gemm(true, true, m, n, k, at.data(), m, bt.data(), k, 0.0f, c3.data(), n);
    expect_close(c0, c1, 1e-6f);
    expect_close(c0, c2, 1e-6f);
    expect_close(c0, c3, 1e-6f);
}

TEST(KernelsScalar, DoubleAlwaysScalar) { EXPECT_EQ(active<double>().isa, Isa::scalar); }

TEST_F(Avx2Kernels, GemmEquivalentAcrossShapesAndTransposes) {
    Rng rng(11);
    const std::size_t dims[][3] = {{1, 1, 1},   {3, 5, 7},    {4, 16, 8},   {17, 33, 9},
                                   {64, 64, 64}, {5, 100, 31}, {128, 9, 300}, {33, 257, 65}};
    for (const auto& d : dims) {
        const std::size_t m = d[0], n = d[1], k = d[2];
        for (int ta = 0; ta < 2; ++ta)
            for (int tb = 0; tb < 2; ++tb)
                for (float beta : {0.0f, 1.0f, 0.5f}) {
                    auto a = random_vec(m * k, rng), b = random_vec(k * n, rng), c = random_vec(m * n, rng);
                    auto c2 = c;
                    const std::size_t lda = ta ? m : k, ldb = tb ? k : n;
                    ref.gemm(ta, tb, m, n, k, a.data(), lda, b.data(), ldb, beta, c.data(), n);
                    fast->gemm(ta, tb, m, n, k, a.data(), lda, b.data(), ldb, beta, c2.data(), n);
                    SCOPED_TRACE(::testing::Message() << m << "x" << n << "x" << k << " ta=" << ta << " tb=" << tb
                                                      << " beta=" << beta);
                    expect_close(c, c2, 2e-5f * static_cast<float>(std::sqrt(k)));
                }
    }
}

TEST_F(Avx2Kernels, GemmHonoursLeadingDimensions) {
    Rng rng(12);
    const std::size_t m = 9, n = 11, k = 13, lda = 20, ldb = 15, ldc = 17;
    auto a = random_vec(m * lda, rng), b = random_vec(k * ldb, rng), c = random_vec(m * ldc, rng);
    auto c2 = c;
    ref.gemm(false, false, m, n, k, a.data(), lda, b.data(), ldb, 1.0f, c.data(), ldc);
    fast->gemm(false, false, m, n, k, a.data(), lda, b.data(), ldb, 1.0f, c2.data(), ldc);
    expect_close(c, c2, 1e-4f);
}

TEST_F(Avx2Kernels, ElementwiseEquivalent) {
    Rng rng(13);
    for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 1000u, 4099u}) {
        auto x = random_vec(n, rng), y = random_vec(n, rng), g = random_vec(n, rng);
        auto y1 = y, y2 = y;
        ref.axpy(n, 0.37f, x.data(), y1.data());
        fast->axpy(n, 0.37f, x.data(), y2.data());
        expect_close(y1, y2, 1e-6f);

        EXPECT_NEAR(ref.dot(n, x.data(), y.data()), fast->dot(n, x.data(), y.data()), 1e-4 * (1.0 + n / 100.0));
        EXPECT_NEAR(ref.sum(n, x.data()), fast->sum(n, x.data()), 1e-4 * (1.0 + n / 100.0));

        std::vector<float> r1(n), r2(n);
        ref.relu(n, x.data(), r1.data());
        fast->relu(n, x.data(), r2.data());
        EXPECT_EQ(r1, r2);

        auto gx1 = y, gx2 = y;
        ref.relu_backward(n, x.data(), g.data(), gx1.data());
        fast->relu_backward(n, x.data(), g.data(), gx2.data());
        EXPECT_EQ(gx1, gx2);

        auto p1 = x, p2 = x, v1 = y, v2 = y;
        ref.sgd_momentum(n, 0.01f, 0.9f, 5e-4f, p1.data(), g.data(), v1.data());
        fast->sgd_momentum(n, 0.01f, 0.9f, 5e-4f, p2.data(), g.data(), v2.data());
        expect_close(p1, p2, 1e-6f);
        expect_close(v1, v2, 1e-6f);
    }
}

TEST_F(Avx2Kernels, ReluBackwardTreatsZeroAsInactive) {
    std::vector<float> x{0.0f, -0.0f, 1e-30f, -1e-30f, 2.0f, 0.0f, 0.0f, 0.0f, 3.0f};
    std::vector<float> gy(x.size(), 1.0f), gx(x.size(), 0.0f);
    fast->relu_backward(x.size(), x.data(), gy.data(), gx.data());
    EXPECT_EQ(gx, (std::vector<float>{0, 0, 1, 0, 1, 0, 0, 0, 1}));
}

TEST(KernelsDispatch, ForceIsaRoundTrip) {
    const Isa before = active_isa();
    ASSERT_TRUE(force_isa(Isa::scalar));
    EXPECT_EQ(active<float>().isa, Isa::scalar);
    if (avx2_table()) {
        ASSERT_TRUE(force_isa(Isa::avx2));
        EXPECT_EQ(active<float>().isa, Isa::avx2);
    } else {
        EXPECT_FALSE(force_isa(Isa::avx2));
    }
    force_isa(before);
}
