#include <cstdlib>
#include <string>

#include "chestnet/kernels.hpp"

namespace chestnet::kernels {

#ifdef CHESTNET_HAVE_AVX2
const KernelTable<float>* avx2_table_impl();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(CHESTNET_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa() {
    if (const char* env = std::getenv("CHESTNET_ISA")) {
        if (std::string(env) == "scalar") return Isa::scalar;
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

Isa& selected() {
    static Isa isa = initial_isa();
    return isa;
}

}  // namespace

const KernelTable<float>* avx2_table() {
#ifdef CHESTNET_HAVE_AVX2
    static const KernelTable<float>* table = cpu_has_avx2() ? avx2_table_impl() : nullptr;
    return table;
#else
    return nullptr;
#endif
}

bool force_isa(Isa isa) {
    if (isa == Isa::avx2 && avx2_table() == nullptr) return false;
    selected() = isa;
    return true;
}

Isa active_isa() { return selected(); }

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

template <>
const KernelTable<float>& active<float>() {
    if (selected() == Isa::avx2) {
        if (const auto* t = avx2_table()) return *t;
    }
    return scalar_table<float>();
}

// Gradient-check precision stays on the reference path.
template <>
const KernelTable<double>& active<double>() {
    return scalar_table<double>();
}

}  // namespace chestnet::kernels
