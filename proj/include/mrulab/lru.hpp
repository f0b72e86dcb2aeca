#pragma once

#include <vector>

#include "mrulab/rng.hpp"
#include "mrulab/tensor.hpp"

namespace mrulab {

// Diagonal linear recurrent unit (the fading-memory baseline):
//   h_t = lambda (.) h_{t-1} + gamma (.) (B x_t),   lambda_j = exp(-exp(nu_j)) e^{i theta_j}
//   y_t = Re(C h_t) + D x_t
// The complex state is stored as (re,im)-interleaved reals so the scan
// engine's 2x2 rotation-scaling elements run the recurrence. |lambda| < 1 for
// every nu, so no update can destabilize the recurrence.
struct LruParams {
    Tensor nu;     // [N] log-magnitude parameter
    Tensor theta;  // [N] phase
    Tensor gamma;  // [N] input normalization
    Tensor b_re, b_im;  // [N, M]
    Tensor c_re, c_im;  // [H_out, N]
    Tensor d;           // [H_out, M]

    size_t state_dim() const { return nu.dim(0); }
    size_t input_dim() const { return b_re.dim(1); }
    size_t output_dim() const { return c_re.dim(0); }

    // lambda as interleaved (re, im) pairs, [2N].
    std::vector<float> lambda_interleaved() const;
};

// Eigenvalue magnitudes uniform on the ring [r_min, r_max] (uniform in r^2),
// phases uniform in [0, theta_max], gamma_j = sqrt(1 - |lambda_j|^2),
// B and C Glorot, D zero.
LruParams lru_init(Rng& rng, size_t state_dim, size_t input_dim,
                   size_t output_dim, double r_min, double r_max,
                   double theta_max);

struct LruForwardCache {
    Tensor h;             // [T, 2N] interleaved state
    Tensor u_re, u_im;    // [T, N] B x_t
    std::vector<float> h0;  // [2N]
    Tensor y;             // [T, H_out]
};

struct LruGrads {
    Tensor dnu, dtheta, dgamma;
    Tensor db_re, db_im, dc_re, dc_im, dd;
    Tensor dl_dx;               // [T, M]
    std::vector<float> dl_dh0;  // [2N]
};

LruForwardCache lru_forward(const LruParams& p, const Tensor& x,
                            const std::vector<float>& h0, size_t scan_chunk = 0);

void lru_backward(const LruParams& p, const LruForwardCache& cache,
                  const Tensor& x, const Tensor& dl_dy, LruGrads& grads);

LruGrads lru_grads_zeros(const LruParams& p, size_t steps);

}  // namespace mrulab
