#include "mrulab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "mrulab/threadpool.hpp"

namespace mrulab::kern {

bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

Isa detect_isa() {
    if (const char* env = std::getenv("MRULAB_ISA")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
        if (std::strcmp(env, "avx2") == 0) return Isa::avx2;
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& isa_slot() {
    static std::atomic<Isa> isa{detect_isa()};
    return isa;
}

}  // namespace

Isa active_isa() { return isa_slot().load(std::memory_order_relaxed); }
void force_isa(Isa isa) { isa_slot().store(isa, std::memory_order_relaxed); }

void matmul_f32(const float* a, const float* b, float* c,
                size_t m, size_t k, size_t n) {
    auto rows = active_isa() == Isa::avx2 ? detail::matmul_rows_avx2
                                          : detail::matmul_rows_scalar;
    // Rows are independent; split across workers only when the product is
    // large enough to amortize the handoff.
    if (m >= 4 && m * k * n >= (1u << 20) && ThreadPool::instance().size() > 1) {
        size_t parts = std::min(m, ThreadPool::instance().size() * 2);
        size_t chunk = (m + parts - 1) / parts;
        parts = (m + chunk - 1) / chunk;
        ThreadPool::instance().parallel_shards(parts, [&](size_t p) {
            size_t lo = p * chunk;
            size_t hi = std::min(m, lo + chunk);
            rows(a, b, c, k, n, lo, hi);
        });
    } else {
        rows(a, b, c, k, n, 0, m);
    }
}

#define MRULAB_DISPATCH(pub, impl, args, ...)                 \
    void pub args {                                           \
        if (active_isa() == Isa::avx2)                        \
            detail::impl##_avx2(__VA_ARGS__);                 \
        else                                                  \
            detail::impl##_scalar(__VA_ARGS__);               \
    }

MRULAB_DISPATCH(combine_real, combine_real,
                (const float* la, const float* lb, const float* ra,
                 const float* rb, float* oa, float* ob, size_t n),
                la, lb, ra, rb, oa, ob, n)
MRULAB_DISPATCH(combine_cplx, combine_cplx,
                (const float* la, const float* lb, const float* ra,
                 const float* rb, float* oa, float* ob, size_t n),
                la, lb, ra, rb, oa, ob, n)
MRULAB_DISPATCH(recur_real, recur_real,
                (const float* a, const float* b, const float* hprev, float* h,
                 size_t n),
                a, b, hprev, h, n)
MRULAB_DISPATCH(recur_cplx, recur_cplx,
                (const float* a, const float* b, const float* hprev, float* h,
                 size_t n),
                a, b, hprev, h, n)
MRULAB_DISPATCH(sigmoid_f32, sigmoid, (const float* x, float* out, size_t n),
                x, out, n)
MRULAB_DISPATCH(bmru_gates, bmru_gates,
                (const float* h_hat, const float* v, const float* alpha,
                 float* z, float* s, float* a, float* b, size_t n),
                h_hat, v, alpha, z, s, a, b, n)
MRULAB_DISPATCH(add_f32, add, (const float* x, const float* y, float* out, size_t n),
                x, y, out, n)
MRULAB_DISPATCH(mul_f32, mul, (const float* x, const float* y, float* out, size_t n),
                x, y, out, n)
MRULAB_DISPATCH(axpy_f32, axpy, (float alpha, const float* x, float* y, size_t n),
                alpha, x, y, n)

#undef MRULAB_DISPATCH

}  // namespace mrulab::kern
