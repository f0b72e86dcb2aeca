#pragma once

#include <vector>

#include "mrulab/rng.hpp"
#include "mrulab/tensor.hpp"

namespace mrulab {

// Bistable memory recurrent unit. Per timestep:
//   h_hat_t = W_x x_t + b_x
//   beta_t  = |W_beta x_t + b_beta|
//   z_t     = H(|h_hat_t| - beta_t)          (binary, H(0) = 1)
//   h_t     = z_t (.) S(h_hat_t) (.) alpha + (1 - z_t) (.) h_{t-1}
// with S the sign function, S(0) = 1. The recurrence runs through the scan
// module with a_t = 1 - z_t, b_t = z_t (.) S(h_hat_t) (.) alpha.
struct BmruParams {
    Tensor w_x;     // [N, M]
    Tensor b_x;     // [N]
    Tensor w_beta;  // [N, M]
    Tensor b_beta;  // [N]
    Tensor alpha;   // [N], positive after init
    float alpha_surr = 1.0f;  // surrogate width; 0 = straight-through

    size_t state_dim() const { return w_x.dim(0); }
    size_t input_dim() const { return w_x.dim(1); }
};

// alpha all-ones, b_beta = 0.5 so thresholds start near 0.5 on unit-scale
// inputs (a mix of writing and holding gates at step 0), weights Glorot.
BmruParams bmru_init(Rng& rng, size_t state_dim, size_t input_dim,
                     float alpha_surr = 1.0f);

struct BmruForwardCache {
    Tensor h_hat;     // [T, N] candidates
    Tensor beta_pre;  // [T, N] W_beta x + b_beta, before the abs
    Tensor beta;      // [T, N] |beta_pre|
    Tensor z;         // [T, N], exactly 0 or 1
    Tensor s;         // [T, N], exactly +/-1
    Tensor h;         // [T, N]
    std::vector<float> h0;
};

struct BmruGrads {
    Tensor dw_x, db_x, dw_beta, db_beta, dalpha;
    Tensor dl_dx;                // [T, M]
    std::vector<float> dl_dh0;   // [N]
};

// Scalar semantics of the unit: alpha*S(x) when |x| >= beta, else hold.
float bmru_scalar_step(float h_prev, float x, float beta, float alpha);

// d/du of the arctangent gate surrogate: 1 / (1 + (alpha_surr*pi*u)^2).
float surrogate_h_prime(float u, float alpha_surr);

Tensor bmru_preactivations(const BmruParams& p, const Tensor& x, Tensor* beta_pre);

// Full forward over one sequence x [T, M] from state h0 [N]. Throws on
// non-finite input. scan_chunk controls the parallel-scan chunking of the
// recurrence (0 = sequential-equivalent single chunk).
BmruForwardCache bmru_forward(const BmruParams& p, const Tensor& x,
                              const std::vector<float>& h0,
                              size_t scan_chunk = 0);

// Surrogate-gradient backward. Exact binary adjoint on the state path
// (dh_t/dh_{t-1} is the cached 1-z_t), surrogate derivatives only at the
// H and S nodes. Accumulates parameter gradients into grads (callers zero or
// carry them), writes dl_dx/dl_dh0.
void bmru_backward(const BmruParams& p, const BmruForwardCache& cache,
                   const Tensor& x, const Tensor& dl_dh, BmruGrads& grads);

BmruGrads bmru_grads_zeros(const BmruParams& p, size_t steps);

}  // namespace mrulab
