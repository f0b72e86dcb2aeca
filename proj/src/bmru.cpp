#include "mrulab/bmru.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mrulab/kernels.hpp"
#include "mrulab/scan.hpp"

namespace mrulab {

float bmru_scalar_step(float h_prev, float x, float beta, float alpha) {
    if (beta < 0.0f) throw std::invalid_argument("bmru_scalar_step: beta >= 0");
    const float ax = x < 0.0f ? -x : x;
    if (ax >= beta) {
        return x < 0.0f ? -alpha : alpha;  // S(0) = 1
    }
    return h_prev;
}

float surrogate_h_prime(float u, float alpha_surr) {
    const float t = alpha_surr * static_cast<float>(std::numbers::pi) * u;
    return 1.0f / (1.0f + t * t);
}

BmruParams bmru_init(Rng& rng, size_t state_dim, size_t input_dim, float alpha_surr) {
    BmruParams p;
    p.w_x = init_glorot_uniform(rng, input_dim, state_dim);
    p.b_x = Tensor({state_dim}, 0.0f);
    p.w_beta = init_glorot_uniform(rng, input_dim, state_dim);
    p.b_beta = Tensor({state_dim}, 0.5f);
    p.alpha = Tensor({state_dim}, 1.0f);
    p.alpha_surr = alpha_surr;
    return p;
}

Tensor bmru_preactivations(const BmruParams& p, const Tensor& x, Tensor* beta_pre) {
    Tensor h_hat = matmul_nt(x, p.w_x);
    Tensor v = matmul_nt(x, p.w_beta);
    const size_t T = x.dim(0), N = p.state_dim();
    for (size_t t = 0; t < T; ++t) {
        kern::add_f32(h_hat.data() + t * N, p.b_x.data(), h_hat.data() + t * N, N);
        kern::add_f32(v.data() + t * N, p.b_beta.data(), v.data() + t * N, N);
    }
    *beta_pre = std::move(v);
    return h_hat;
}

BmruForwardCache bmru_forward(const BmruParams& p, const Tensor& x,
                              const std::vector<float>& h0, size_t scan_chunk) {
    if (x.rank() != 2 || x.dim(1) != p.input_dim()) {
        throw std::invalid_argument("bmru_forward: x must be [T, M] with M = input dim");
    }
    const size_t T = x.dim(0), N = p.state_dim();
    if (h0.size() != N) throw std::invalid_argument("bmru_forward: h0 size != N");
    if (!x.all_finite()) throw std::invalid_argument("bmru_forward: non-finite input");

    BmruForwardCache cache;
    cache.h_hat = bmru_preactivations(p, x, &cache.beta_pre);
    cache.beta = Tensor({T, N});
    cache.z = Tensor({T, N});
    cache.s = Tensor({T, N});
    cache.h0 = h0;

    RecurrenceTape tape;
    tape.steps = T;
    tape.dim = N;
    tape.kind = ElemKind::real;
    tape.a.resize(T * N);
    tape.b.resize(T * N);
    tape.h0 = h0;
    for (size_t t = 0; t < T; ++t) {
        kern::bmru_gates(cache.h_hat.data() + t * N, cache.beta_pre.data() + t * N,
                         p.alpha.data(), cache.z.data() + t * N,
                         cache.s.data() + t * N, tape.a.data() + t * N,
                         tape.b.data() + t * N, N);
        for (size_t j = 0; j < N; ++j) {
            const float v = cache.beta_pre.at(t, j);
            cache.beta.at(t, j) = v < 0.0f ? -v : v;
        }
    }
    // Binary multipliers make the chunked scan bitwise equal to the
    // sequential loop, so chunking is purely a throughput choice.
    if (scan_chunk == 0) {
        cache.h = scan_sequential(tape);
    } else {
        cache.h = scan_parallel(tape, scan_chunk);
    }
    return cache;
}

BmruGrads bmru_grads_zeros(const BmruParams& p, size_t steps) {
    BmruGrads g;
    g.dw_x = Tensor(p.w_x.shape());
    g.db_x = Tensor(p.b_x.shape());
    g.dw_beta = Tensor(p.w_beta.shape());
    g.db_beta = Tensor(p.b_beta.shape());
    g.dalpha = Tensor(p.alpha.shape());
    g.dl_dx = Tensor({steps, p.input_dim()});
    g.dl_dh0.assign(p.state_dim(), 0.0f);
    return g;
}

void bmru_backward(const BmruParams& p, const BmruForwardCache& cache,
                   const Tensor& x, const Tensor& dl_dh, BmruGrads& grads) {
    const size_t T = x.dim(0), N = p.state_dim(), M = p.input_dim();
    if (cache.h.dim(0) != T || dl_dh.dim(0) != T || dl_dh.dim(1) != N) {
        throw std::invalid_argument("bmru_backward: cache/input mismatch");
    }

    // Temporal adjoint through h_t = (1-z_t) h_{t-1} + z_t s_t alpha, using
    // the forward gates: the state-path derivative is the exact binary 1-z_t.
    RecurrenceTape tape;
    tape.steps = T;
    tape.dim = N;
    tape.kind = ElemKind::real;
    tape.a.resize(T * N);
    tape.b.resize(T * N);
    tape.h0 = cache.h0;
    for (size_t i = 0; i < T * N; ++i) {
        const float z = cache.z[i];
        tape.a[i] = 1.0f - z;
        tape.b[i] = z * cache.s[i] * p.alpha[i % N];
    }
    ScanBackwardResult adj = scan_backward(tape, cache.h, dl_dh);
    const Tensor& g = adj.dl_db;  // g_t = total adjoint of h_t

    Tensor dh_hat({T, N});
    Tensor dv({T, N});
    const float asurr = p.alpha_surr;
    for (size_t t = 0; t < T; ++t) {
        for (size_t j = 0; j < N; ++j) {
            const float gt = g.at(t, j);
            const float z = cache.z.at(t, j);
            const float s = cache.s.at(t, j);
            const float hh = cache.h_hat.at(t, j);
            const float beta = cache.beta.at(t, j);
            const float hprev = t == 0 ? cache.h0[j] : cache.h.at(t - 1, j);
            const float alpha = p.alpha[j];

            const float dz = gt * (s * alpha - hprev);
            const float du = dz * surrogate_h_prime(std::abs(hh) - beta, asurr);
            const float sign_hh = hh < 0.0f ? -1.0f : 1.0f;  // d|h_hat|, S(0)=1
            const float ds = gt * z * alpha;
            dh_hat.at(t, j) = du * sign_hh + ds * 2.0f * surrogate_h_prime(hh, asurr);
            const float vpre = cache.beta_pre.at(t, j);
            const float sign_v = vpre < 0.0f ? -1.0f : 1.0f;  // d|v|/dv, S(0)=1
            dv.at(t, j) = -du * sign_v;
        }
    }

    // dalpha_j = sum_t g ( . ) z ( . ) s: gradient flows only through writes.
    for (size_t j = 0; j < N; ++j) {
        double acc = 0.0;
        for (size_t t = 0; t < T; ++t) {
            acc += static_cast<double>(g.at(t, j)) * cache.z.at(t, j) * cache.s.at(t, j);
        }
        grads.dalpha[j] += static_cast<float>(acc);
    }

    Tensor dw_x = matmul_tn(dh_hat, x);
    Tensor dw_beta = matmul_tn(dv, x);
    kern::add_f32(grads.dw_x.data(), dw_x.data(), grads.dw_x.data(), dw_x.size());
    kern::add_f32(grads.dw_beta.data(), dw_beta.data(), grads.dw_beta.data(), dw_beta.size());
    for (size_t j = 0; j < N; ++j) {
        double bx = 0.0, bb = 0.0;
        for (size_t t = 0; t < T; ++t) {
            bx += dh_hat.at(t, j);
            bb += dv.at(t, j);
        }
        grads.db_x[j] += static_cast<float>(bx);
        grads.db_beta[j] += static_cast<float>(bb);
    }

    Tensor dx_h = matmul(dh_hat, p.w_x);
    Tensor dx_v = matmul(dv, p.w_beta);
    if (grads.dl_dx.dim(0) != T || grads.dl_dx.dim(1) != M) {
        grads.dl_dx = Tensor({T, M});
    }
    for (size_t i = 0; i < T * M; ++i) {
        grads.dl_dx[i] = dx_h[i] + dx_v[i];
    }
    grads.dl_dh0 = adj.dl_dh0;
}

}  // namespace mrulab
