#include "mrulab/kernels.hpp"

#include <cmath>
#include <vector>

// Scalar reference kernels. The AVX2 variants in kernels_avx2.cpp follow the
// same operation order per element and must stay bit-identical to these.

namespace mrulab::kern {

namespace scalar {

void matmul_rows(const float* a, const float* b, float* c,
                 size_t k, size_t n, size_t row_lo, size_t row_hi) {
    std::vector<double> acc(n);
    for (size_t i = row_lo; i < row_hi; ++i) {
        for (size_t j = 0; j < n; ++j) acc[j] = 0.0;
        const float* arow = a + i * k;
        for (size_t kk = 0; kk < k; ++kk) {
            const double av = static_cast<double>(arow[kk]);
            const float* brow = b + kk * n;
            for (size_t j = 0; j < n; ++j) {
                acc[j] += av * static_cast<double>(brow[j]);
            }
        }
        float* crow = c + i * n;
        for (size_t j = 0; j < n; ++j) crow[j] = static_cast<float>(acc[j]);
    }
}

void combine_real(const float* la, const float* lb,
                  const float* ra, const float* rb,
                  float* oa, float* ob, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        const float a = la[i] * ra[i];
        const float b = ra[i] * lb[i] + rb[i];
        oa[i] = a;
        ob[i] = b;
    }
}

void combine_cplx(const float* la, const float* lb,
                  const float* ra, const float* rb,
                  float* oa, float* ob, size_t n) {
    for (size_t i = 0; i < n; i += 2) {
        const float lar = la[i], lai = la[i + 1];
        const float rar = ra[i], rai = ra[i + 1];
        const float lbr = lb[i], lbi = lb[i + 1];
        oa[i] = lar * rar - lai * rai;
        oa[i + 1] = lar * rai + lai * rar;
        ob[i] = (rar * lbr - rai * lbi) + rb[i];
        ob[i + 1] = (rar * lbi + rai * lbr) + rb[i + 1];
    }
}

void recur_real(const float* a, const float* b, const float* hprev,
                float* h, size_t n) {
    for (size_t i = 0; i < n; ++i) h[i] = a[i] * hprev[i] + b[i];
}

void recur_cplx(const float* a, const float* b, const float* hprev,
                float* h, size_t n) {
    for (size_t i = 0; i < n; i += 2) {
        const float ar = a[i], ai = a[i + 1];
        const float pr = hprev[i], pi = hprev[i + 1];
        h[i] = (ar * pr - ai * pi) + b[i];
        h[i + 1] = (ar * pi + ai * pr) + b[i + 1];
    }
}

// exp via Cody-Waite range reduction + degree-5 polynomial; float ops only so
// the AVX2 mirror reproduces it exactly.
inline float exp_poly(float x) {
    x = x < -87.0f ? -87.0f : x;
    x = x > 88.0f ? 88.0f : x;
    float nf = std::floor(x * 1.44269504f + 0.5f);
    float r = x - nf * 0.693359375f;
    r = r - nf * -2.12194440e-4f;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    p = p * r * r + r;
    p = p + 1.0f;
    const int n = static_cast<int>(nf);
    union { int i; float f; } scale;
    scale.i = (n + 127) << 23;
    return p * scale.f;
}

void sigmoid(const float* x, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        out[i] = 1.0f / (1.0f + exp_poly(-x[i]));
    }
}

void bmru_gates(const float* h_hat, const float* v, const float* alpha,
                float* z, float* s, float* a, float* b, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        const float ah = h_hat[i] < 0.0f ? -h_hat[i] : h_hat[i];
        const float beta = v[i] < 0.0f ? -v[i] : v[i];
        const float zi = ah >= beta ? 1.0f : 0.0f;
        const float si = h_hat[i] < 0.0f ? -1.0f : 1.0f;
        z[i] = zi;
        s[i] = si;
        a[i] = 1.0f - zi;
        b[i] = zi * si * alpha[i];
    }
}

void add(const float* x, const float* y, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(const float* x, const float* y, float* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void axpy(float alpha, const float* x, float* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

}  // namespace scalar

namespace detail {
void matmul_rows_scalar(const float* a, const float* b, float* c,
                        size_t k, size_t n, size_t row_lo, size_t row_hi) {
    scalar::matmul_rows(a, b, c, k, n, row_lo, row_hi);
}
void combine_real_scalar(const float* la, const float* lb, const float* ra,
                         const float* rb, float* oa, float* ob, size_t n) {
    scalar::combine_real(la, lb, ra, rb, oa, ob, n);
}
void combine_cplx_scalar(const float* la, const float* lb, const float* ra,
                         const float* rb, float* oa, float* ob, size_t n) {
    scalar::combine_cplx(la, lb, ra, rb, oa, ob, n);
}
void recur_real_scalar(const float* a, const float* b, const float* hprev,
                       float* h, size_t n) {
    scalar::recur_real(a, b, hprev, h, n);
}
void recur_cplx_scalar(const float* a, const float* b, const float* hprev,
                       float* h, size_t n) {
    scalar::recur_cplx(a, b, hprev, h, n);
}
void sigmoid_scalar(const float* x, float* out, size_t n) {
    scalar::sigmoid(x, out, n);
}
void bmru_gates_scalar(const float* h_hat, const float* v, const float* alpha,
                       float* z, float* s, float* a, float* b, size_t n) {
    scalar::bmru_gates(h_hat, v, alpha, z, s, a, b, n);
}
void add_scalar(const float* x, const float* y, float* out, size_t n) {
    scalar::add(x, y, out, n);
}
void mul_scalar(const float* x, const float* y, float* out, size_t n) {
    scalar::mul(x, y, out, n);
}
void axpy_scalar(float alpha, const float* x, float* y, size_t n) {
    scalar::axpy(alpha, x, y, n);
}
}  // namespace detail

void transpose_f32(const float* in, float* out, size_t m, size_t n) {
    constexpr size_t kBlock = 32;
    for (size_t ib = 0; ib < m; ib += kBlock) {
        const size_t imax = ib + kBlock < m ? ib + kBlock : m;
        for (size_t jb = 0; jb < n; jb += kBlock) {
            const size_t jmax = jb + kBlock < n ? jb + kBlock : n;
            for (size_t i = ib; i < imax; ++i) {
                for (size_t j = jb; j < jmax; ++j) {
                    out[j * m + i] = in[i * n + j];
                }
            }
        }
    }
}

double sum_f64(const float* x, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]);
    return acc;
}

double dot_f64(const float* x, const float* y, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    }
    return acc;
}

}  // namespace mrulab::kern
