#include "mrulab/lru.hpp"

#include <cmath>
#include <stdexcept>

#include "mrulab/kernels.hpp"
#include "mrulab/scan.hpp"

namespace mrulab {

std::vector<float> LruParams::lambda_interleaved() const {
    const size_t n = state_dim();
    std::vector<float> lam(2 * n);
    for (size_t j = 0; j < n; ++j) {
        const double r = std::exp(-std::exp(static_cast<double>(nu[j])));
        lam[2 * j] = static_cast<float>(r * std::cos(static_cast<double>(theta[j])));
        lam[2 * j + 1] = static_cast<float>(r * std::sin(static_cast<double>(theta[j])));
    }
    return lam;
}

LruParams lru_init(Rng& rng, size_t state_dim, size_t input_dim,
                   size_t output_dim, double r_min, double r_max,
                   double theta_max) {
    if (!(0.0 <= r_min && r_min < r_max && r_max < 1.0)) {
        throw std::invalid_argument("lru_init: need 0 <= r_min < r_max < 1");
    }
    if (!(theta_max > 0.0)) throw std::invalid_argument("lru_init: theta_max > 0");

    LruParams p;
    p.nu = Tensor({state_dim});
    p.theta = Tensor({state_dim});
    p.gamma = Tensor({state_dim});
    for (size_t j = 0; j < state_dim; ++j) {
        const double u = rng.uniform();
        double r = std::sqrt(r_min * r_min + u * (r_max * r_max - r_min * r_min));
        if (r < 1e-9) r = 1e-9;  // keep log(-log r) finite when r_min = 0
        p.nu[j] = static_cast<float>(std::log(-std::log(r)));
        p.gamma[j] = static_cast<float>(std::sqrt(1.0 - r * r));
    }
    for (size_t j = 0; j < state_dim; ++j) {
        p.theta[j] = static_cast<float>(rng.uniform(0.0, theta_max));
    }
    p.b_re = init_glorot_uniform(rng, input_dim, state_dim);
    p.b_im = init_glorot_uniform(rng, input_dim, state_dim);
    p.c_re = init_glorot_uniform(rng, state_dim, output_dim);
    p.c_im = init_glorot_uniform(rng, state_dim, output_dim);
    p.d = Tensor({output_dim, input_dim}, 0.0f);
    return p;
}

LruForwardCache lru_forward(const LruParams& p, const Tensor& x,
                            const std::vector<float>& h0, size_t scan_chunk) {
    const size_t N = p.state_dim(), M = p.input_dim(), H = p.output_dim();
    if (x.rank() != 2 || x.dim(1) != M) {
        throw std::invalid_argument("lru_forward: x must be [T, M]");
    }
    if (h0.size() != 2 * N) throw std::invalid_argument("lru_forward: h0 size != 2N");
    const size_t T = x.dim(0);

    LruForwardCache cache;
    cache.h0 = h0;
    cache.u_re = matmul_nt(x, p.b_re);
    cache.u_im = matmul_nt(x, p.b_im);

    RecurrenceTape tape;
    tape.steps = T;
    tape.dim = 2 * N;
    tape.kind = ElemKind::complex_interleaved;
    tape.a.resize(T * 2 * N);
    tape.b.resize(T * 2 * N);
    tape.h0 = h0;
    const std::vector<float> lam = p.lambda_interleaved();
    for (size_t t = 0; t < T; ++t) {
        float* arow = tape.a.data() + t * 2 * N;
        float* brow = tape.b.data() + t * 2 * N;
        std::copy(lam.begin(), lam.end(), arow);
        for (size_t j = 0; j < N; ++j) {
            brow[2 * j] = p.gamma[j] * cache.u_re.at(t, j);
            brow[2 * j + 1] = p.gamma[j] * cache.u_im.at(t, j);
        }
    }
    cache.h = scan_chunk == 0 ? scan_sequential(tape) : scan_parallel(tape, scan_chunk);

    // y = Re(C h) + D x
    Tensor h_re({T, N}), h_im({T, N});
    for (size_t t = 0; t < T; ++t) {
        for (size_t j = 0; j < N; ++j) {
            h_re.at(t, j) = cache.h.at(t, 2 * j);
            h_im.at(t, j) = cache.h.at(t, 2 * j + 1);
        }
    }
    Tensor y_re = matmul_nt(h_re, p.c_re);
    Tensor y_im = matmul_nt(h_im, p.c_im);
    Tensor y_d = matmul_nt(x, p.d);
    cache.y = Tensor({T, H});
    for (size_t i = 0; i < T * H; ++i) {
        cache.y[i] = y_re[i] - y_im[i] + y_d[i];
    }
    return cache;
}

LruGrads lru_grads_zeros(const LruParams& p, size_t steps) {
    LruGrads g;
    g.dnu = Tensor(p.nu.shape());
    g.dtheta = Tensor(p.theta.shape());
    g.dgamma = Tensor(p.gamma.shape());
    g.db_re = Tensor(p.b_re.shape());
    g.db_im = Tensor(p.b_im.shape());
    g.dc_re = Tensor(p.c_re.shape());
    g.dc_im = Tensor(p.c_im.shape());
    g.dd = Tensor(p.d.shape());
    g.dl_dx = Tensor({steps, p.input_dim()});
    g.dl_dh0.assign(2 * p.state_dim(), 0.0f);
    return g;
}

void lru_backward(const LruParams& p, const LruForwardCache& cache,
                  const Tensor& x, const Tensor& dl_dy, LruGrads& grads) {
    const size_t N = p.state_dim(), M = p.input_dim(), H = p.output_dim();
    const size_t T = x.dim(0);
    if (cache.h.dim(0) != T || dl_dy.dim(0) != T || dl_dy.dim(1) != H) {
        throw std::invalid_argument("lru_backward: cache/input mismatch");
    }

    // Through y = Re(C h) + D x.
    Tensor h_re({T, N}), h_im({T, N});
    for (size_t t = 0; t < T; ++t) {
        for (size_t j = 0; j < N; ++j) {
            h_re.at(t, j) = cache.h.at(t, 2 * j);
            h_im.at(t, j) = cache.h.at(t, 2 * j + 1);
        }
    }
    {
        Tensor dd = matmul_tn(dl_dy, x);
        kern::add_f32(grads.dd.data(), dd.data(), grads.dd.data(), dd.size());
        Tensor dc_re = matmul_tn(dl_dy, h_re);
        kern::add_f32(grads.dc_re.data(), dc_re.data(), grads.dc_re.data(), dc_re.size());
        Tensor dc_im = matmul_tn(dl_dy, h_im);
        for (size_t i = 0; i < dc_im.size(); ++i) grads.dc_im[i] -= dc_im[i];
    }
    Tensor dh_re = matmul(dl_dy, p.c_re);
    Tensor dh_im = matmul(dl_dy, p.c_im);
    Tensor dl_dh({T, 2 * N});
    for (size_t t = 0; t < T; ++t) {
        for (size_t j = 0; j < N; ++j) {
            dl_dh.at(t, 2 * j) = dh_re.at(t, j);
            dl_dh.at(t, 2 * j + 1) = -dh_im.at(t, j);
        }
    }

    // Temporal adjoint through the diagonal recurrence (conjugate multipliers
    // inside scan_backward for the complex kind).
    RecurrenceTape tape;
    tape.steps = T;
    tape.dim = 2 * N;
    tape.kind = ElemKind::complex_interleaved;
    tape.a.resize(T * 2 * N);
    tape.b.resize(T * 2 * N);
    tape.h0 = cache.h0;
    const std::vector<float> lam = p.lambda_interleaved();
    for (size_t t = 0; t < T; ++t) {
        float* arow = tape.a.data() + t * 2 * N;
        float* brow = tape.b.data() + t * 2 * N;
        std::copy(lam.begin(), lam.end(), arow);
        for (size_t j = 0; j < N; ++j) {
            brow[2 * j] = p.gamma[j] * cache.u_re.at(t, j);
            brow[2 * j + 1] = p.gamma[j] * cache.u_im.at(t, j);
        }
    }
    ScanBackwardResult adj = scan_backward(tape, cache.h, dl_dh);
    const Tensor& g = adj.dl_db;
    grads.dl_dh0 = adj.dl_dh0;

    // dlambda -> (dnu, dtheta) through lambda = exp(-exp(nu)) e^{i theta}.
    for (size_t j = 0; j < N; ++j) {
        double dlam_re = 0.0, dlam_im = 0.0;
        for (size_t t = 0; t < T; ++t) {
            dlam_re += adj.dl_da.at(t, 2 * j);
            dlam_im += adj.dl_da.at(t, 2 * j + 1);
        }
        const double r = std::exp(-std::exp(static_cast<double>(p.nu[j])));
        const double th = static_cast<double>(p.theta[j]);
        const double dr_dnu = r * std::log(r);  // log r = -exp(nu)
        grads.dnu[j] += static_cast<float>((dlam_re * std::cos(th) + dlam_im * std::sin(th)) * dr_dnu);
        grads.dtheta[j] += static_cast<float>(-dlam_re * r * std::sin(th) + dlam_im * r * std::cos(th));
    }

    // b_t = gamma (.) u_t with u = B x.
    Tensor du_re({T, N}), du_im({T, N});
    for (size_t j = 0; j < N; ++j) {
        double dg = 0.0;
        const float gam = p.gamma[j];
        for (size_t t = 0; t < T; ++t) {
            const float gre = g.at(t, 2 * j);
            const float gim = g.at(t, 2 * j + 1);
            dg += static_cast<double>(gre) * cache.u_re.at(t, j) +
                  static_cast<double>(gim) * cache.u_im.at(t, j);
            du_re.at(t, j) = gam * gre;
            du_im.at(t, j) = gam * gim;
        }
        grads.dgamma[j] += static_cast<float>(dg);
    }
    {
        Tensor db_re = matmul_tn(du_re, x);
        kern::add_f32(grads.db_re.data(), db_re.data(), grads.db_re.data(), db_re.size());
        Tensor db_im = matmul_tn(du_im, x);
        kern::add_f32(grads.db_im.data(), db_im.data(), grads.db_im.data(), db_im.size());
    }

    Tensor dx_b_re = matmul(du_re, p.b_re);
    Tensor dx_b_im = matmul(du_im, p.b_im);
    Tensor dx_d = matmul(dl_dy, p.d);
    if (grads.dl_dx.dim(0) != T || grads.dl_dx.dim(1) != M) {
        grads.dl_dx = Tensor({T, M});
    }
    for (size_t i = 0; i < T * M; ++i) {
        grads.dl_dx[i] = dx_b_re[i] + dx_b_im[i] + dx_d[i];
    }
}

}  // namespace mrulab
