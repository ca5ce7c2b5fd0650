#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops of the engine. Every kernel has a scalar reference
// implementation; float additionally has an AVX2/FMA variant chosen at runtime.
// Variants agree to rounding (FMA contraction and lane-wise reduction order
// differ), and each variant is deterministic on its own.

namespace chestnet::kernels {

enum class Isa { scalar, avx2 };

template <typename T>
struct KernelTable {
    Isa isa;
    // C = op(A) * op(B) + beta * C, row-major; op(A) is MxK, op(B) is KxN.
    void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                 const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                 std::size_t ldc);
    // y += alpha * x
    void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
    T (*dot)(std::size_t n, const T* x, const T* y);
    T (*sum)(std::size_t n, const T* x);
    // y = max(x, 0)
    void (*relu)(std::size_t n, const T* x, T* y);
    // gx += gy where x > 0
    void (*relu_backward)(std::size_t n, const T* x, const T* gy, T* gx);
    // v = momentum * v + (g + decay * p);  p -= lr * v
    void (*sgd_momentum)(std::size_t n, T lr, T momentum, T decay, T* p, const T* g, T* v);
};

template <typename T>
const KernelTable<T>& scalar_table();

/// AVX2 table for float; nullptr when not compiled in or unsupported by the CPU.
const KernelTable<float>* avx2_table();

/// Table used by the engine. Float selects AVX2 when available unless
/// CHESTNET_ISA=scalar is set or force_isa() overrides it.
template <typename T>
const KernelTable<T>& active();

/// Override runtime selection (tests and benchmarks). Returns false if unavailable.
bool force_isa(Isa isa);
Isa active_isa();
std::string_view isa_name(Isa isa);

}  // namespace chestnet::kernels
