#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "chestnet/kernels.hpp"

namespace chestnet::kernels {
namespace {

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, lo);
    lo = _mm_add_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

// MR rows x 16 columns of C += A * B.
template <int MR>
inline void block16(std::size_t k, const float* a, std::size_t lda, const float* b,
                    std::size_t ldb, float* c, std::size_t ldc) {
    __m256 acc0[MR];
    __m256 acc1[MR];
    for (int r = 0; r < MR; ++r) {
        acc0[r] = _mm256_loadu_ps(c + r * ldc);
        acc1[r] = _mm256_loadu_ps(c + r * ldc + 8);
    }
    for (std::size_t p = 0; p < k; ++p) {
        const __m256 b0 = _mm256_loadu_ps(b + p * ldb);
        const __m256 b1 = _mm256_loadu_ps(b + p * ldb + 8);
        for (int r = 0; r < MR; ++r) {
            const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
            acc0[r] = _mm256_fmadd_ps(av, b0, acc0[r]);
            acc1[r] = _mm256_fmadd_ps(av, b1, acc1[r]);
        }
    }
    for (int r = 0; r < MR; ++r) {
        _mm256_storeu_ps(c + r * ldc, acc0[r]);
        _mm256_storeu_ps(c + r * ldc + 8, acc1[r]);
    }
}

template <int MR>
inline void block8(std::size_t k, const float* a, std::size_t lda, const float* b,
                   std::size_t ldb, float* c, std::size_t ldc) {
    __m256 acc[MR];
    for (int r = 0; r < MR; ++r) acc[r] = _mm256_loadu_ps(c + r * ldc);
    for (std::size_t p = 0; p < k; ++p) {
        const __m256 b0 = _mm256_loadu_ps(b + p * ldb);
        for (int r = 0; r < MR; ++r) {
            acc[r] = _mm256_fmadd_ps(_mm256_broadcast_ss(a + r * lda + p), b0, acc[r]);
        }
    }
    for (int r = 0; r < MR; ++r) _mm256_storeu_ps(c + r * ldc, acc[r]);
}

template <int MR>
void row_panel(std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
               std::size_t ldb, float* c, std::size_t ldc) {
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) block16<MR>(k, a, lda, b + j, ldb, c + j, ldc);
    for (; j + 8 <= n; j += 8) block8<MR>(k, a, lda, b + j, ldb, c + j, ldc);
    for (; j < n; ++j) {
        for (int r = 0; r < MR; ++r) {
            float acc = c[r * ldc + j];
            for (std::size_t p = 0; p < k; ++p) acc += a[r * lda + p] * b[p * ldb + j];
            c[r * ldc + j] = acc;
        }
    }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) row_panel<4>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc);
    switch (m - i) {
        case 3: row_panel<3>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc); break;
        case 2: row_panel<2>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc); break;
        case 1: row_panel<1>(n, k, a + i * lda, lda, b, ldb, c + i * ldc, ldc); break;
        default: break;
    }
}

void transpose(std::size_t rows, std::size_t cols, const float* src, std::size_t ld,
               std::vector<float>& dst) {
    dst.resize(rows * cols);
    constexpr std::size_t kTile = 32;
    for (std::size_t r0 = 0; r0 < rows; r0 += kTile) {
        for (std::size_t c0 = 0; c0 < cols; c0 += kTile) {
            const std::size_t r1 = std::min(rows, r0 + kTile);
            const std::size_t c1 = std::min(cols, c0 + kTile);
            for (std::size_t r = r0; r < r1; ++r) {
                for (std::size_t cc = c0; cc < c1; ++cc) dst[cc * rows + r] = src[r * ld + cc];
            }
        }
    }
}

void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, const float* a,
          std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        float* crow = c + i * ldc;
        if (beta == 0.0f) {
            std::fill(crow, crow + n, 0.0f);
        } else if (beta != 1.0f) {
            for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
        }
    }
    if (m == 0 || n == 0 || k == 0) return;
    thread_local std::vector<float> pack_a;
    thread_local std::vector<float> pack_b;
    const float* ap = a;
    std::size_t alda = lda;
    if (ta) {
        // A is stored KxM.
        transpose(k, m, a, lda, pack_a);
        ap = pack_a.data();
        alda = k;
    }
    const float* bp = b;
    std::size_t bldb = ldb;
    if (tb) {
        // B is stored NxK.
        transpose(n, k, b, ldb, pack_b);
        bp = pack_b.data();
        bldb = n;
    }
    gemm_nn(m, n, k, ap, alda, bp, bldb, c, ldc);
}

void axpy(std::size_t n, float alpha, const float* x, float* y) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

float dot(std::size_t n, const float* x, const float* y) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
    }
    float s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

float sum(std::size_t n, const float* x) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void relu(std::size_t n, const float* x, float* y) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(std::size_t n, const float* x, const float* gy, float* gx) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        const __m256 g = _mm256_and_ps(mask, _mm256_loadu_ps(gy + i));
        _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), g));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0f) gx[i] += gy[i];
    }
}

void sgd_momentum(std::size_t n, float lr, float momentum, float decay, float* p, const float* g,
                  float* v) {
    const __m256 vm = _mm256_set1_ps(momentum);
    const __m256 vd = _mm256_set1_ps(decay);
    const __m256 vlr = _mm256_set1_ps(lr);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 pv = _mm256_loadu_ps(p + i);
        const __m256 step = _mm256_fmadd_ps(vd, pv, _mm256_loadu_ps(g + i));
        const __m256 vel = _mm256_fmadd_ps(vm, _mm256_loadu_ps(v + i), step);
        _mm256_storeu_ps(v + i, vel);
        _mm256_storeu_ps(p + i, _mm256_fnmadd_ps(vlr, vel, pv));
    }
    for (; i < n; ++i) {
        v[i] = momentum * v[i] + (g[i] + decay * p[i]);
        p[i] -= lr * v[i];
    }
}

constexpr KernelTable<float> kAvx2{Isa::avx2, &gemm,  &axpy,          &dot,
                                   &sum,      &relu,  &relu_backward, &sgd_momentum};

}  // namespace

const KernelTable<float>* avx2_table_impl() { return &kAvx2; }

}  // namespace chestnet::kernels
