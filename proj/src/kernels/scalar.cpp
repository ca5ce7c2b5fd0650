#include <algorithm>

#include "chestnet/kernels.hpp"

namespace chestnet::kernels {
namespace {

template <typename T>
void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        if (beta == T(0)) {
            std::fill(crow, crow + n, T(0));
        } else if (beta != T(1)) {
            for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
        }
    }
    if (!tb) {
        for (std::size_t i = 0; i < m; ++i) {
            T* crow = c + i * ldc;
            for (std::size_t p = 0; p < k; ++p) {
                const T av = ta ? a[p * lda + i] : a[i * lda + p];
                const T* brow = b + p * ldb;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
        return;
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            T acc = T(0);
            for (std::size_t p = 0; p < k; ++p) {
                const T av = ta ? a[p * lda + i] : a[i * lda + p];
                acc += av * b[j * ldb + p];
            }
            c[i * ldc + j] += acc;
        }
    }
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

template <typename T>
T sum(std::size_t n, const T* x) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

template <typename T>
void relu(std::size_t n, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(std::size_t n, const T* x, const T* gy, T* gx) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > T(0)) gx[i] += gy[i];
    }
}

template <typename T>
void sgd_momentum(std::size_t n, T lr, T momentum, T decay, T* p, const T* g, T* v) {
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = momentum * v[i] + (g[i] + decay * p[i]);
        p[i] -= lr * v[i];
    }
}

template <typename T>
constexpr KernelTable<T> make_table() {
    return {Isa::scalar, &gemm<T>, &axpy<T>, &dot<T>, &sum<T>, &relu<T>, &relu_backward<T>,
            &sgd_momentum<T>};
}

constexpr KernelTable<float> kScalarF = make_table<float>();
constexpr KernelTable<double> kScalarD = make_table<double>();

}  // namespace

template <>
const KernelTable<float>& scalar_table<float>() {
    return kScalarF;
}

template <>
const KernelTable<double>& scalar_table<double>() {
    return kScalarD;
}

}  // namespace chestnet::kernels
