#include "mrulab/kernels.hpp"

#include <immintrin.h>

// AVX2 kernel variants. Each mirrors the scalar reference operation-for-
// operation per output element: f32 paths use separate mul/add (no FMA, which
// would change rounding), the f64 matmul accumulator may use FMA because the
// f32->f64 product is exact so fused and unfused rounding agree.

namespace mrulab::kern::detail {

void matmul_rows_avx2(const float* a, const float* b, float* c,
                      size_t k, size_t n, size_t row_lo, size_t row_hi) {
    const size_t n16 = n - n % 16;
    const size_t n4 = n - n % 4;
    for (size_t i = row_lo; i < row_hi; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (size_t j = 0; j < n16; j += 16) {
            __m256d acc0 = _mm256_setzero_pd();
            __m256d acc1 = _mm256_setzero_pd();
            __m256d acc2 = _mm256_setzero_pd();
            __m256d acc3 = _mm256_setzero_pd();
            for (size_t kk = 0; kk < k; ++kk) {
                const __m256d av = _mm256_set1_pd(static_cast<double>(arow[kk]));
                const float* bp = b + kk * n + j;
                acc0 = _mm256_fmadd_pd(av, _mm256_cvtps_pd(_mm_loadu_ps(bp)), acc0);
                acc1 = _mm256_fmadd_pd(av, _mm256_cvtps_pd(_mm_loadu_ps(bp + 4)), acc1);
                acc2 = _mm256_fmadd_pd(av, _mm256_cvtps_pd(_mm_loadu_ps(bp + 8)), acc2);
                acc3 = _mm256_fmadd_pd(av, _mm256_cvtps_pd(_mm_loadu_ps(bp + 12)), acc3);
            }
            _mm_storeu_ps(crow + j, _mm256_cvtpd_ps(acc0));
            _mm_storeu_ps(crow + j + 4, _mm256_cvtpd_ps(acc1));
            _mm_storeu_ps(crow + j + 8, _mm256_cvtpd_ps(acc2));
            _mm_storeu_ps(crow + j + 12, _mm256_cvtpd_ps(acc3));
        }
        for (size_t j = n16; j < n4; j += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (size_t kk = 0; kk < k; ++kk) {
                const __m256d av = _mm256_set1_pd(static_cast<double>(arow[kk]));
                acc = _mm256_fmadd_pd(av, _mm256_cvtps_pd(_mm_loadu_ps(b + kk * n + j)), acc);
            }
            _mm_storeu_ps(crow + j, _mm256_cvtpd_ps(acc));
        }
        for (size_t j = n4; j < n; ++j) {
            double acc = 0.0;
            for (size_t kk = 0; kk < k; ++kk) {
                acc += static_cast<double>(arow[kk]) * static_cast<double>(b[kk * n + j]);
            }
            crow[j] = static_cast<float>(acc);
        }
    }
}

void combine_real_avx2(const float* la, const float* lb,
                       const float* ra, const float* rb,
                       float* oa, float* ob, size_t n) {
    const size_t n8 = n - n % 8;
    for (size_t i = 0; i < n8; i += 8) {
        const __m256 lav = _mm256_loadu_ps(la + i);
        const __m256 lbv = _mm256_loadu_ps(lb + i);
        const __m256 rav = _mm256_loadu_ps(ra + i);
        const __m256 rbv = _mm256_loadu_ps(rb + i);
        _mm256_storeu_ps(oa + i, _mm256_mul_ps(lav, rav));
        _mm256_storeu_ps(ob + i, _mm256_add_ps(_mm256_mul_ps(rav, lbv), rbv));
    }
    if (n8 < n) combine_real_scalar(la + n8, lb + n8, ra + n8, rb + n8, oa + n8, ob + n8, n - n8);
}

// Complex multiply on (re,im)-interleaved lanes:
//   even = xr*yr - xi*yi, odd = xr*yi + xi*yr, via lane dup + pair swap + addsub.
static inline __m256 cmul(__m256 x, __m256 y) {
    const __m256 xr = _mm256_moveldup_ps(x);
    const __m256 xi = _mm256_movehdup_ps(x);
    const __m256 yswap = _mm256_permute_ps(y, 0xB1);
    return _mm256_addsub_ps(_mm256_mul_ps(xr, y), _mm256_mul_ps(xi, yswap));
}

void combine_cplx_avx2(const float* la, const float* lb,
                       const float* ra, const float* rb,
                       float* oa, float* ob, size_t n) {
    const size_t n8 = n - n % 8;
    for (size_t i = 0; i < n8; i += 8) {
        const __m256 lav = _mm256_loadu_ps(la + i);
        const __m256 lbv = _mm256_loadu_ps(lb + i);
        const __m256 rav = _mm256_loadu_ps(ra + i);
        const __m256 rbv = _mm256_loadu_ps(rb + i);
        _mm256_storeu_ps(oa + i, cmul(lav, rav));
        _mm256_storeu_ps(ob + i, _mm256_add_ps(cmul(rav, lbv), rbv));
    }
    if (n8 < n) combine_cplx_scalar(la + n8, lb + n8, ra + n8, rb + n8, oa + n8, ob + n8, n - n8);
}

void recur_real_avx2(const float* a, const float* b, const float* hprev,
                     float* h, size_t n) {
    const size_t n8 = n - n % 8;
    for (size_t i = 0; i < n8; i += 8) {
        const __m256 av = _mm256_loadu_ps(a + i);
        const __m256 pv = _mm256_loadu_ps(hprev + i);
        const __m256 bv = _mm256_loadu_ps(b + i);
        _mm256_storeu_ps(h + i, _mm256_add_ps(_mm256_mul_ps(av, pv), bv));
    }
    if (n8 < n) recur_real_scalar(a + n8, b + n8, hprev + n8, h + n8, n - n8);
}

void recur_cplx_avx2(const float* a, const float* b, const float* hprev,
                     float* h, size_t n) {
    const size_t n8 = n - n % 8;
    for (size_t i = 0; i < n8; i += 8) {
        const __m256 av = _mm256_loadu_ps(a + i);
        const __m256 pv = _mm256_loadu_ps(hprev + i);
        const __m256 bv = _mm256_loadu_ps(b + i);
        _mm256_storeu_ps(h + i, _mm256_add_ps(cmul(av, pv), bv));
    }
    if (n8 < n) recur_cplx_scalar(a + n8, b + n8, hprev + n8, h + n8, n - n8);
}

static inline __m256 exp_poly8(__m256 x) {
    x = _mm256_max_ps(x, _mm256_set1_ps(-87.0f));
    x = _mm256_min_ps(x, _mm256_set1_ps(88.0f));
    const __m256 nf = _mm256_floor_ps(
        _mm256_add_ps(_mm256_mul_ps(x, _mm256_set1_ps(1.44269504f)), _mm256_set1_ps(0.5f)));
    __m256 r = _mm256_sub_ps(x, _mm256_mul_ps(nf, _mm256_set1_ps(0.693359375f)));
    r = _mm256_sub_ps(r, _mm256_mul_ps(nf, _mm256_set1_ps(-2.12194440e-4f)));
    __m256 p = _mm256_set1_ps(1.9875691500e-4f);
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(1.3981999507e-3f));
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(8.3334519073e-3f));
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(4.1665795894e-2f));
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(1.6666665459e-1f));
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(5.0000001201e-1f));
    p = _mm256_add_ps(_mm256_mul_ps(_mm256_mul_ps(p, r), r), r);
    p = _mm256_add_ps(p, _mm256_set1_ps(1.0f));
    const __m256i n = _mm256_cvttps_epi32(nf);
    const __m256i scale_i = _mm256_slli_epi32(_mm256_add_epi32(n, _mm256_set1_epi32(127)), 23);
    return _mm256_mul_ps(p, _mm256_castsi256_ps(scale_i));
}

void sigmoid_avx2(const float* x, float* out, size_t n) {
    const size_t n8 = n - n % 8;
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 zero = _mm256_setzero_ps();
    for (size_t i = 0; i < n8; i += 8) {
        const __m256 xv = _mm256_loadu_ps(x + i);
        const __m256 e = exp_poly8(_mm256_sub_ps(zero, xv));
        _mm256_storeu_ps(out + i, _mm256_div_ps(one, _mm256_add_ps(one, e)));
    }
    if (n8 < n) sigmoid_scalar(x + n8, out + n8, n - n8);
}

void bmru_gates_avx2(const float* h_hat, const float* v, const float* alpha,
                     float* z, float* s, float* a, float* b, size_t n) {
    const size_t n8 = n - n % 8;
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 neg_one = _mm256_set1_ps(-1.0f);
    const __m256 zero = _mm256_setzero_ps();
    const __m256 abs_mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7FFFFFFF));
    for (size_t i = 0; i < n8; i += 8) {
        const __m256 hh = _mm256_loadu_ps(h_hat + i);
        const __m256 vv = _mm256_loadu_ps(v + i);
        const __m256 ah = _mm256_and_ps(hh, abs_mask);
        const __m256 beta = _mm256_and_ps(vv, abs_mask);
        const __m256 zmask = _mm256_cmp_ps(ah, beta, _CMP_GE_OQ);
        const __m256 zv = _mm256_and_ps(zmask, one);
        const __m256 smask = _mm256_cmp_ps(hh, zero, _CMP_LT_OQ);
        const __m256 sv = _mm256_blendv_ps(one, neg_one, smask);
        _mm256_storeu_ps(z + i, zv);
        _mm256_storeu_ps(s + i, sv);
        _mm256_storeu_ps(a + i, _mm256_sub_ps(one, zv));
        _mm256_storeu_ps(b + i, _mm256_mul_ps(_mm256_mul_ps(zv, sv), _mm256_loadu_ps(alpha + i)));
    }
    if (n8 < n) {
        bmru_gates_scalar(h_hat + n8, v + n8, alpha + n8, z + n8, s + n8, a + n8, b + n8, n - n8);
    }
}

void add_avx2(const float* x, const float* y, float* out, size_t n) {
    const size_t n8 = n - n % 8;
    for (size_t i = 0; i < n8; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    if (n8 < n) add_scalar(x + n8, y + n8, out + n8, n - n8);
}

void mul_avx2(const float* x, const float* y, float* out, size_t n) {
    const size_t n8 = n - n % 8;
    for (size_t i = 0; i < n8; i += 8) {
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    }
    if (n8 < n) mul_scalar(x + n8, y + n8, out + n8, n - n8);
}

void axpy_avx2(float alpha, const float* x, float* y, size_t n) {
    const size_t n8 = n - n % 8;
    const __m256 av = _mm256_set1_ps(alpha);
    for (size_t i = 0; i < n8; i += 8) {
        const __m256 prod = _mm256_mul_ps(av, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
    }
    if (n8 < n) axpy_scalar(alpha, x + n8, y + n8, n - n8);
}

}  // namespace mrulab::kern::detail
