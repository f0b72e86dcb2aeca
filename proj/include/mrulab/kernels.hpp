#pragma once

#include <cstddef>

// Data-parallel inner loops. Every arithmetic kernel has a scalar reference
// implementation and an AVX2 variant selected at runtime; the pairs are
// bit-identical by construction (same operation order per output element,
// f32 paths avoid FMA contraction, f64 accumulation uses exact f32->f64
// products). Equivalence is asserted in tests/test_kernels.cpp.
namespace mrulab::kern {

enum class Isa { scalar, avx2 };

bool cpu_has_avx2();
// Selected at first use: AVX2 when available, overridable with MRULAB_ISA=scalar.
Isa active_isa();
void force_isa(Isa isa);  // testing hook

// C[m,n] = A[m,k] * B[k,n], row-major. Accumulates in f64 over the full k
// range per output element, in increasing-k order (matches a naive triple
// loop bitwise). Large products are split across worker threads by row.
void matmul_f32(const float* a, const float* b, float* c,
                size_t m, size_t k, size_t n);

// out[n,m] = in[m,n]
void transpose_f32(const float* in, float* out, size_t m, size_t n);

// Scan pair composition, elementwise over n floats:
//   oa = la*ra, ob = ra*lb + rb
void combine_real(const float* la, const float* lb,
                  const float* ra, const float* rb,
                  float* oa, float* ob, size_t n);
// Same with (re,im) interleaved pairs and complex multiplies; n = float count.
void combine_cplx(const float* la, const float* lb,
                  const float* ra, const float* rb,
                  float* oa, float* ob, size_t n);

// One recurrence step: h = a*hprev + b, elementwise / complex-interleaved.
void recur_real(const float* a, const float* b, const float* hprev,
                float* h, size_t n);
void recur_cplx(const float* a, const float* b, const float* hprev,
                float* h, size_t n);

// out = 1/(1+exp(-x)), polynomial exp (identical float sequence on both ISAs).
void sigmoid_f32(const float* x, float* out, size_t n);

// BMRU gate evaluation from candidate h_hat and pre-abs threshold v:
//   z = (|h_hat| >= |v|) ? 1 : 0,  s = sign(h_hat) with sign(0)=+1,
//   a = 1-z,  b = z*s*alpha
void bmru_gates(const float* h_hat, const float* v, const float* alpha,
                float* z, float* s, float* a, float* b, size_t n);

void add_f32(const float* x, const float* y, float* out, size_t n);
void mul_f32(const float* x, const float* y, float* out, size_t n);
void axpy_f32(float alpha, const float* x, float* y, size_t n);  // y += alpha*x

// Deterministic reductions: sequential f64, scalar only (no reassociation).
double sum_f64(const float* x, size_t n);
double dot_f64(const float* x, const float* y, size_t n);

// Per-ISA entry points (used by dispatch, by AVX2 tail handling, and by the
// scalar-vs-AVX2 equivalence tests).
namespace detail {
#define MRULAB_KERN_ENTRY(name, ...)       \
    void name##_scalar(__VA_ARGS__);       \
    void name##_avx2(__VA_ARGS__)
MRULAB_KERN_ENTRY(matmul_rows, const float* a, const float* b, float* c,
                  size_t k, size_t n, size_t row_lo, size_t row_hi);
MRULAB_KERN_ENTRY(combine_real, const float* la, const float* lb,
                  const float* ra, const float* rb, float* oa, float* ob,
                  size_t n);
MRULAB_KERN_ENTRY(combine_cplx, const float* la, const float* lb,
                  const float* ra, const float* rb, float* oa, float* ob,
                  size_t n);
MRULAB_KERN_ENTRY(recur_real, const float* a, const float* b,
                  const float* hprev, float* h, size_t n);
MRULAB_KERN_ENTRY(recur_cplx, const float* a, const float* b,
                  const float* hprev, float* h, size_t n);
MRULAB_KERN_ENTRY(sigmoid, const float* x, float* out, size_t n);
MRULAB_KERN_ENTRY(bmru_gates, const float* h_hat, const float* v,
                  const float* alpha, float* z, float* s, float* a, float* b,
                  size_t n);
MRULAB_KERN_ENTRY(add, const float* x, const float* y, float* out, size_t n);
MRULAB_KERN_ENTRY(mul, const float* x, const float* y, float* out, size_t n);
MRULAB_KERN_ENTRY(axpy, float alpha, const float* x, float* y, size_t n);
#undef MRULAB_KERN_ENTRY
}  // namespace detail

}  // namespace mrulab::kern
