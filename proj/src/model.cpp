#include "mrulab/model.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "mrulab/kernels.hpp"
#include "mrulab/threadpool.hpp"

namespace mrulab {

namespace {

Tensor slice_rows(const Tensor& x, size_t lo, size_t hi) {
    const size_t f = x.dim(x.rank() - 1);
    Tensor out({hi - lo, f});
    std::memcpy(out.data(), x.data() + lo * f, (hi - lo) * f * sizeof(float));
    return out;
}

void add_rows(Tensor& dst, size_t lo, const Tensor& src) {
    const size_t n = src.size();
    kern::add_f32(dst.data() + lo * src.dim(1), src.data(),
                  dst.data() + lo * src.dim(1), n);
}

Tensor reverse_time(const Tensor& x) {
    const size_t T = x.dim(0), f = x.dim(1);
    Tensor out({T, f});
    for (size_t t = 0; t < T; ++t) {
        std::memcpy(out.data() + t * f, x.data() + (T - 1 - t) * f, f * sizeof(float));
    }
    return out;
}

// Column sums over [rows, f], f64 in fixed shard order.
std::vector<double> colsum_sharded(const float* x, size_t rows, size_t f) {
    const size_t shards = std::min(rows, kReduceShards);
    const size_t chunk = (rows + shards - 1) / shards;
    std::vector<double> partial(shards * f, 0.0);
    ThreadPool::instance().parallel_shards(shards, [&](size_t s) {
        const size_t lo = s * chunk, hi = std::min(rows, lo + chunk);
        double* acc = partial.data() + s * f;
        for (size_t r = lo; r < hi; ++r) {
            const float* row = x + r * f;
            for (size_t j = 0; j < f; ++j) acc[j] += static_cast<double>(row[j]);
        }
    });
    std::vector<double> total(f, 0.0);
    for (size_t s = 0; s < shards; ++s) {
        for (size_t j = 0; j < f; ++j) total[j] += partial[s * f + j];
    }
    return total;
}

float gelu(float x) {
    return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f));
}

float gelu_prime(float x) {
    const float cdf = 0.5f * (1.0f + std::erf(x * 0.70710678118654752f));
    const float pdf = std::exp(-0.5f * x * x) *
                      static_cast<float>(1.0 / std::sqrt(2.0 * std::numbers::pi));
    return cdf + x * pdf;
}

}  // namespace

Tensor positional_encoding(size_t steps, size_t dim) {
    if (dim < 2 || dim % 2 != 0) {
        throw std::invalid_argument("positional_encoding: dim must be even and >= 2");
    }
    Tensor pe({steps, dim});
    for (size_t t = 0; t < steps; ++t) {
        for (size_t k = 0; 2 * k < dim; ++k) {
            const double freq = std::pow(10000.0, -(2.0 * static_cast<double>(k)) /
                                                      static_cast<double>(dim));
            const double arg = static_cast<double>(t) * freq;
            pe.at(t, 2 * k) = static_cast<float>(std::sin(arg));
            pe.at(t, 2 * k + 1) = static_cast<float>(std::cos(arg));
        }
    }
    return pe;
}

// ---------------------------------------------------------------------------
// LinearLayer
// ---------------------------------------------------------------------------

void LinearLayer::init(Rng& rng, size_t in, size_t out) {
    w = init_glorot_uniform(rng, in, out);
    b = Tensor({out}, 0.0f);
    dw = Tensor({out, in}, 0.0f);
    db = Tensor({out}, 0.0f);
}

Tensor LinearLayer::forward(const Tensor& x) const {
    Tensor y = matmul_nt(x, w);
    const size_t rows = y.dim(0), out = y.dim(1);
    for (size_t r = 0; r < rows; ++r) {
        kern::add_f32(y.data() + r * out, b.data(), y.data() + r * out, out);
    }
    return y;
}

Tensor LinearLayer::backward(const Tensor& x, const Tensor& dy) {
    Tensor dwi = matmul_tn(dy, x);
    kern::add_f32(dw.data(), dwi.data(), dw.data(), dw.size());
    const auto sums = colsum_sharded(dy.data(), dy.dim(0), dy.dim(1));
    for (size_t j = 0; j < db.size(); ++j) db[j] += static_cast<float>(sums[j]);
    return matmul(dy, w);
}

// ---------------------------------------------------------------------------
// BatchNormLayer: per-feature normalization over the batch*time rows.
// ---------------------------------------------------------------------------

void BatchNormLayer::init(size_t features) {
    scale = Tensor({features}, 1.0f);
    shift = Tensor({features}, 0.0f);
    dscale = Tensor({features}, 0.0f);
    dshift = Tensor({features}, 0.0f);
    running_mean = Tensor({features}, 0.0f);
    running_var = Tensor({features}, 1.0f);
}

Tensor BatchNormLayer::forward(const Tensor& x, RunMode mode, Cache& cache) {
    const size_t f = scale.size();
    const size_t rows = x.size() / f;
    cache.mode = mode;
    Tensor y({rows, f});
    if (mode == RunMode::train) {
        if (rows < 2) throw std::invalid_argument("batch_norm: train mode needs >= 2 rows");
        const auto sums = colsum_sharded(x.data(), rows, f);
        std::vector<double> mean(f), var(f);
        for (size_t j = 0; j < f; ++j) mean[j] = sums[j] / static_cast<double>(rows);
        {
            // E[(x-mean)^2], sharded like the sums.
            const size_t shards = std::min(rows, kReduceShards);
            const size_t chunk = (rows + shards - 1) / shards;
            std::vector<double> partial(shards * f, 0.0);
            ThreadPool::instance().parallel_shards(shards, [&](size_t s) {
                const size_t lo = s * chunk, hi = std::min(rows, lo + chunk);
                double* acc = partial.data() + s * f;
                for (size_t r = lo; r < hi; ++r) {
                    const float* row = x.data() + r * f;
                    for (size_t j = 0; j < f; ++j) {
                        const double d = static_cast<double>(row[j]) - mean[j];
                        acc[j] += d * d;
                    }
                }
            });
            for (size_t j = 0; j < f; ++j) {
                var[j] = 0.0;
                for (size_t s = 0; s < shards; ++s) var[j] += partial[s * f + j];
                var[j] /= static_cast<double>(rows);
            }
        }
        cache.inv_std.resize(f);
        for (size_t j = 0; j < f; ++j) {
            cache.inv_std[j] = static_cast<float>(
                1.0 / std::sqrt(var[j] + static_cast<double>(eps)));
            running_mean[j] = (1.0f - momentum) * running_mean[j] +
                              momentum * static_cast<float>(mean[j]);
            running_var[j] = (1.0f - momentum) * running_var[j] +
                             momentum * static_cast<float>(var[j]);
        }
        cache.xhat = Tensor({rows, f});
        ThreadPool::instance().parallel_for(rows, [&](size_t r) {
            const float* xr = x.data() + r * f;
            float* xh = cache.xhat.data() + r * f;
            float* yr = y.data() + r * f;
            for (size_t j = 0; j < f; ++j) {
                xh[j] = (xr[j] - static_cast<float>(mean[j])) * cache.inv_std[j];
                yr[j] = scale[j] * xh[j] + shift[j];
            }
        });
    } else {
        cache.inv_std.resize(f);
        for (size_t j = 0; j < f; ++j) {
            cache.inv_std[j] = static_cast<float>(
                1.0 / std::sqrt(static_cast<double>(running_var[j]) +
                                static_cast<double>(eps)));
        }
        cache.xhat = Tensor({rows, f});
        ThreadPool::instance().parallel_for(rows, [&](size_t r) {
            const float* xr = x.data() + r * f;
            float* xh = cache.xhat.data() + r * f;
            float* yr = y.data() + r * f;
            for (size_t j = 0; j < f; ++j) {
                xh[j] = (xr[j] - running_mean[j]) * cache.inv_std[j];
                yr[j] = scale[j] * xh[j] + shift[j];
            }
        });
    }
    return y;
}

Tensor BatchNormLayer::backward(const Cache& cache, const Tensor& dy) {
    const size_t f = scale.size();
    const size_t rows = dy.size() / f;
    {
        // dscale = sum dy*xhat, dshift = sum dy.
        const size_t shards = std::min(rows, kReduceShards);
        const size_t chunk = (rows + shards - 1) / shards;
        std::vector<double> pg(shards * f, 0.0), pb(shards * f, 0.0);
        ThreadPool::instance().parallel_shards(shards, [&](size_t s) {
            const size_t lo = s * chunk, hi = std::min(rows, lo + chunk);
            double* ag = pg.data() + s * f;
            double* ab = pb.data() + s * f;
            for (size_t r = lo; r < hi; ++r) {
                const float* dr = dy.data() + r * f;
                const float* xh = cache.xhat.data() + r * f;
                for (size_t j = 0; j < f; ++j) {
                    ag[j] += static_cast<double>(dr[j]) * xh[j];
                    ab[j] += static_cast<double>(dr[j]);
                }
            }
        });
        for (size_t j = 0; j < f; ++j) {
            double sg = 0.0, sb = 0.0;
            for (size_t s = 0; s < shards; ++s) {
                sg += pg[s * f + j];
                sb += pb[s * f + j];
            }
            dscale[j] += static_cast<float>(sg);
            dshift[j] += static_cast<float>(sb);
        }
        Tensor dx({rows, f});
        if (cache.mode == RunMode::eval) {
            ThreadPool::instance().parallel_for(rows, [&](size_t r) {
                const float* dr = dy.data() + r * f;
                float* dxr = dx.data() + r * f;
                for (size_t j = 0; j < f; ++j) {
                    dxr[j] = dr[j] * scale[j] * cache.inv_std[j];
                }
            });
            return dx;
        }
        // Train mode: the batch statistics depend on x.
        std::vector<double> mean_dxhat(f), mean_dxhat_xhat(f);
        for (size_t j = 0; j < f; ++j) {
            double mg = 0.0, mgx = 0.0;
            for (size_t s = 0; s < shards; ++s) {
                mg += pb[s * f + j];
                mgx += pg[s * f + j];
            }
            // dxhat = dy*scale; the sums above are over plain dy, so scale here.
            mean_dxhat[j] = mg * static_cast<double>(scale[j]) / static_cast<double>(rows);
            mean_dxhat_xhat[j] = mgx * static_cast<double>(scale[j]) / static_cast<double>(rows);
        }
        ThreadPool::instance().parallel_for(rows, [&](size_t r) {
            const float* dr = dy.data() + r * f;
            const float* xh = cache.xhat.data() + r * f;
            float* dxr = dx.data() + r * f;
            for (size_t j = 0; j < f; ++j) {
                const double dxhat = static_cast<double>(dr[j]) * scale[j];
                dxr[j] = static_cast<float>(
                    cache.inv_std[j] *
                    (dxhat - mean_dxhat[j] - static_cast<double>(xh[j]) * mean_dxhat_xhat[j]));
            }
        });
        return dx;
    }
}

// ---------------------------------------------------------------------------
// GluLayer: project to 2H, split (u, v), u (.) sigmoid(v).
// ---------------------------------------------------------------------------

void GluLayer::init(Rng& rng, size_t width) { proj.init(rng, width, 2 * width); }

Tensor GluLayer::forward(const Tensor& x, Cache& cache) const {
    const size_t rows = x.dim(0);
    const size_t h = proj.w.dim(0) / 2;
    Tensor pre = proj.forward(x);
    cache.u = Tensor({rows, h});
    cache.sv = Tensor({rows, h});
    Tensor y({rows, h});
    for (size_t r = 0; r < rows; ++r) {
        const float* prer = pre.data() + r * 2 * h;
        std::memcpy(cache.u.data() + r * h, prer, h * sizeof(float));
        kern::sigmoid_f32(prer + h, cache.sv.data() + r * h, h);
    }
    kern::mul_f32(cache.u.data(), cache.sv.data(), y.data(), rows * h);
    return y;
}

Tensor GluLayer::backward(const Tensor& x, const Cache& cache, const Tensor& dy) {
    const size_t rows = dy.dim(0);
    const size_t h = proj.w.dim(0) / 2;
    Tensor dpre({rows, 2 * h});
    ThreadPool::instance().parallel_for(rows, [&](size_t r) {
        const float* dr = dy.data() + r * h;
        const float* u = cache.u.data() + r * h;
        const float* sv = cache.sv.data() + r * h;
        float* du = dpre.data() + r * 2 * h;
        float* dv = du + h;
        for (size_t j = 0; j < h; ++j) {
            du[j] = dr[j] * sv[j];
            dv[j] = dr[j] * u[j] * sv[j] * (1.0f - sv[j]);
        }
    });
    return proj.backward(x, dpre);
}

// ---------------------------------------------------------------------------
// CellSet
// ---------------------------------------------------------------------------

void CellSet::init(Rng& rng, const BlockConfig& cfg, size_t input_dim) {
    const size_t h = cfg.model_dim;
    if (cfg.cell_kind == CellKind::hybrid && (h % 2 != 0 || cfg.state_dim % 2 != 0)) {
        throw std::invalid_argument("hybrid block needs even model and state dims");
    }
    has_bmru = cfg.cell_kind != CellKind::lru;
    has_lru = cfg.cell_kind != CellKind::bmru;
    const size_t n_bmru = cfg.cell_kind == CellKind::hybrid ? cfg.state_dim / 2 : cfg.state_dim;
    const size_t n_lru = n_bmru;  // equal split
    const size_t out_bmru = cfg.cell_kind == CellKind::hybrid ? h / 2 : h;
    const size_t out_lru = out_bmru;
    if (has_bmru) {
        bmru = bmru_init(rng, n_bmru, input_dim);
        bmru_out.init(rng, n_bmru, out_bmru);
        g.dw_x = Tensor(bmru.w_x.shape());
        g.db_x = Tensor(bmru.b_x.shape());
        g.dw_beta = Tensor(bmru.w_beta.shape());
        g.db_beta = Tensor(bmru.b_beta.shape());
        g.dalpha = Tensor(bmru.alpha.shape());
    }
    if (has_lru) {
        lru = lru_init(rng, n_lru, input_dim, out_lru, 0.0, 0.99, 2.0 * std::numbers::pi);
        g.dnu = Tensor(lru.nu.shape());
        g.dtheta = Tensor(lru.theta.shape());
        g.dgamma = Tensor(lru.gamma.shape());
        g.db_re = Tensor(lru.b_re.shape());
        g.db_im = Tensor(lru.b_im.shape());
        g.dc_re = Tensor(lru.c_re.shape());
        g.dc_im = Tensor(lru.c_im.shape());
        g.dd = Tensor(lru.d.shape());
    }
}

size_t CellSet::out_dim(const BlockConfig& cfg) const { return cfg.model_dim; }

Tensor CellSet::forward(const Tensor& x, Cache& cache) const {
    // x rows are [B*T, Min]; the caller guarantees sample-contiguous layout.
    const size_t min = x.dim(1);
    (void)min;
    const size_t T = cache.steps_hint;
    const size_t B = x.dim(0) / T;
    const size_t out_bm = has_bmru ? bmru_out.w.dim(0) : 0;
    const size_t out_lr = has_lru ? lru.output_dim() : 0;
    Tensor y({B * T, out_bm + out_lr});
    cache.bmru.assign(has_bmru ? B : 0, BmruForwardCache{});
    cache.lru.assign(has_lru ? B : 0, LruForwardCache{});
    ThreadPool::instance().parallel_for(B, [&](size_t b) {
        Tensor xb = slice_rows(x, b * T, (b + 1) * T);
        if (has_bmru) {
            std::vector<float> h0(bmru.state_dim(), 0.0f);
            cache.bmru[b] = bmru_forward(bmru, xb, h0);
            Tensor yb = bmru_out.forward(cache.bmru[b].h);
            for (size_t t = 0; t < T; ++t) {
                std::memcpy(y.data() + ((b * T + t) * (out_bm + out_lr)),
                            yb.data() + t * out_bm, out_bm * sizeof(float));
            }
        }
        if (has_lru) {
            std::vector<float> h0(2 * lru.state_dim(), 0.0f);
            cache.lru[b] = lru_forward(lru, xb, h0);
            for (size_t t = 0; t < T; ++t) {
                std::memcpy(y.data() + ((b * T + t) * (out_bm + out_lr)) + out_bm,
                            cache.lru[b].y.data() + t * out_lr, out_lr * sizeof(float));
            }
        }
    });
    return y;
}

Tensor CellSet::backward(const Tensor& x, const Cache& cache, const Tensor& dy) {
    const size_t T = cache.steps_hint;
    const size_t B = x.dim(0) / T;
    const size_t min = x.dim(1);
    const size_t out_bm = has_bmru ? bmru_out.w.dim(0) : 0;
    const size_t out_lr = has_lru ? lru.output_dim() : 0;
    Tensor dx({B * T, min}, 0.0f);

    const size_t shards = std::min(B, kReduceShards);
    const size_t chunk = (B + shards - 1) / shards;
    std::vector<BmruGrads> bm_local;
    std::vector<LruGrads> lr_local;
    std::vector<Tensor> bm_out_dw(shards), bm_out_db(shards);
    if (has_bmru) {
        bm_local.reserve(shards);
        for (size_t s = 0; s < shards; ++s) {
            bm_local.push_back(bmru_grads_zeros(bmru, T));
            bm_out_dw[s] = Tensor(bmru_out.w.shape());
            bm_out_db[s] = Tensor(bmru_out.b.shape());
        }
    }
    if (has_lru) {
        lr_local.reserve(shards);
        for (size_t s = 0; s < shards; ++s) lr_local.push_back(lru_grads_zeros(lru, T));
    }

    ThreadPool::instance().parallel_shards(shards, [&](size_t s) {
        for (size_t b = s * chunk; b < std::min(B, (s + 1) * chunk); ++b) {
            Tensor xb = slice_rows(x, b * T, (b + 1) * T);
            if (has_bmru) {
                Tensor dyb({T, out_bm});
                for (size_t t = 0; t < T; ++t) {
                    std::memcpy(dyb.data() + t * out_bm,
                                dy.data() + (b * T + t) * (out_bm + out_lr),
                                out_bm * sizeof(float));
                }
                // Output projection backward, accumulated shard-locally.
                Tensor dwi = matmul_tn(dyb, cache.bmru[b].h);
                kern::add_f32(bm_out_dw[s].data(), dwi.data(), bm_out_dw[s].data(), dwi.size());
                const auto sums = colsum_sharded(dyb.data(), T, out_bm);
                for (size_t j = 0; j < out_bm; ++j) {
                    bm_out_db[s][j] += static_cast<float>(sums[j]);
                }
                Tensor dh = matmul(dyb, bmru_out.w);
                bmru_backward(bmru, cache.bmru[b], xb, dh, bm_local[s]);
                add_rows(dx, b * T, bm_local[s].dl_dx);
            }
            if (has_lru) {
                Tensor dyb({T, out_lr});
                for (size_t t = 0; t < T; ++t) {
                    std::memcpy(dyb.data() + t * out_lr,
                                dy.data() + (b * T + t) * (out_bm + out_lr) + out_bm,
                                out_lr * sizeof(float));
                }
                lru_backward(lru, cache.lru[b], xb, dyb, lr_local[s]);
                add_rows(dx, b * T, lr_local[s].dl_dx);
            }
        }
    });

    // Reduce shard accumulators in fixed order.
    for (size_t s = 0; s < shards; ++s) {
        if (has_bmru) {
            kern::add_f32(g.dw_x.data(), bm_local[s].dw_x.data(), g.dw_x.data(), g.dw_x.size());
            kern::add_f32(g.db_x.data(), bm_local[s].db_x.data(), g.db_x.data(), g.db_x.size());
            kern::add_f32(g.dw_beta.data(), bm_local[s].dw_beta.data(), g.dw_beta.data(), g.dw_beta.size());
            kern::add_f32(g.db_beta.data(), bm_local[s].db_beta.data(), g.db_beta.data(), g.db_beta.size());
            kern::add_f32(g.dalpha.data(), bm_local[s].dalpha.data(), g.dalpha.data(), g.dalpha.size());
            kern::add_f32(bmru_out.dw.data(), bm_out_dw[s].data(), bmru_out.dw.data(), bmru_out.dw.size());
            kern::add_f32(bmru_out.db.data(), bm_out_db[s].data(), bmru_out.db.data(), bmru_out.db.size());
        }
        if (has_lru) {
            kern::add_f32(g.dnu.data(), lr_local[s].dnu.data(), g.dnu.data(), g.dnu.size());
            kern::add_f32(g.dtheta.data(), lr_local[s].dtheta.data(), g.dtheta.data(), g.dtheta.size());
            kern::add_f32(g.dgamma.data(), lr_local[s].dgamma.data(), g.dgamma.data(), g.dgamma.size());
            kern::add_f32(g.db_re.data(), lr_local[s].db_re.data(), g.db_re.data(), g.db_re.size());
            kern::add_f32(g.db_im.data(), lr_local[s].db_im.data(), g.db_im.data(), g.db_im.size());
            kern::add_f32(g.dc_re.data(), lr_local[s].dc_re.data(), g.dc_re.data(), g.dc_re.size());
            kern::add_f32(g.dc_im.data(), lr_local[s].dc_im.data(), g.dc_im.data(), g.dc_im.size());
            kern::add_f32(g.dd.data(), lr_local[s].dd.data(), g.dd.data(), g.dd.size());
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Block
// ---------------------------------------------------------------------------

void Block::init(Rng& rng, const BlockConfig& config) {
    cfg = config;
    const size_t h = cfg.model_dim;
    const size_t min = h + cfg.positional_dim;
    bn.init(min);
    cells.init(rng, cfg, min);
    if (cfg.bidirectional) {
        cells_rev.init(rng, cfg, min);
        bidir_merge.init(rng, 2 * h, h);
    }
    glu.init(rng, h);
}

Tensor Block::forward(const Tensor& x, RunMode mode, Cache& cache) {
    const size_t h = cfg.model_dim;
    const size_t p = cfg.positional_dim;
    const size_t T = cache.steps_hint;
    const size_t B = x.dim(0) / T;

    if (p > 0) {
        cache.pe = positional_encoding(T, p);
        cache.bn_in = Tensor({B * T, h + p});
        for (size_t b = 0; b < B; ++b) {
            for (size_t t = 0; t < T; ++t) {
                float* row = cache.bn_in.data() + (b * T + t) * (h + p);
                std::memcpy(row, x.data() + (b * T + t) * h, h * sizeof(float));
                std::memcpy(row + h, cache.pe.data() + t * p, p * sizeof(float));
            }
        }
    } else {
        cache.bn_in = x;
    }
    Tensor bn_out = bn.forward(cache.bn_in, mode, cache.bn);
    cache.cell_in = std::move(bn_out);

    cache.cellc.steps_hint = T;
    Tensor y_f = cells.forward(cache.cell_in, cache.cellc);
    if (cfg.bidirectional) {
        Tensor x_rev({B * T, h + p});
        for (size_t b = 0; b < B; ++b) {
            Tensor xb = slice_rows(cache.cell_in, b * T, (b + 1) * T);
            Tensor xr = reverse_time(xb);
            std::memcpy(x_rev.data() + b * T * (h + p), xr.data(),
                        T * (h + p) * sizeof(float));
        }
        cache.cellc_rev.steps_hint = T;
        Tensor y_r_rev = cells_rev.forward(x_rev, cache.cellc_rev);
        cache.merge_in = Tensor({B * T, 2 * h});
        for (size_t b = 0; b < B; ++b) {
            for (size_t t = 0; t < T; ++t) {
                float* row = cache.merge_in.data() + (b * T + t) * 2 * h;
                std::memcpy(row, y_f.data() + (b * T + t) * h, h * sizeof(float));
                std::memcpy(row + h, y_r_rev.data() + (b * T + (T - 1 - t)) * h,
                            h * sizeof(float));
            }
        }
        cache.cell_out = bidir_merge.forward(cache.merge_in);
    } else {
        cache.cell_out = std::move(y_f);
    }

    Tensor glu_out = glu.forward(cache.cell_out, cache.glu);
    Tensor out({B * T, h});
    kern::add_f32(x.data(), glu_out.data(), out.data(), out.size());
    return out;
}

Tensor Block::backward(const Tensor& x, const Cache& cache, const Tensor& dy) {
    (void)x;
    const size_t h = cfg.model_dim;
    const size_t p = cfg.positional_dim;
    const size_t T = cache.cellc.steps_hint;
    const size_t B = dy.dim(0) / T;

    Tensor dcell_out = glu.backward(cache.cell_out, cache.glu, dy);
    Tensor dcells;
    if (cfg.bidirectional) {
        Tensor dmerge = bidir_merge.backward(cache.merge_in, dcell_out);
        Tensor dy_f({B * T, h});
        Tensor dy_r({B * T, h});  // already re-reversed to the cell's own time
        for (size_t b = 0; b < B; ++b) {
            for (size_t t = 0; t < T; ++t) {
                const float* row = dmerge.data() + (b * T + t) * 2 * h;
                std::memcpy(dy_f.data() + (b * T + t) * h, row, h * sizeof(float));
                std::memcpy(dy_r.data() + (b * T + (T - 1 - t)) * h, row + h,
                            h * sizeof(float));
            }
        }
        dcells = cells.backward(cache.cell_in, cache.cellc, dy_f);
        {
            Tensor x_rev({B * T, h + p});
            for (size_t b = 0; b < B; ++b) {
                Tensor xb = slice_rows(cache.cell_in, b * T, (b + 1) * T);
                Tensor xr = reverse_time(xb);
                std::memcpy(x_rev.data() + b * T * (h + p), xr.data(),
                            T * (h + p) * sizeof(float));
            }
            Tensor dx_rev = cells_rev.backward(x_rev, cache.cellc_rev, dy_r);
            for (size_t b = 0; b < B; ++b) {
                Tensor db = slice_rows(dx_rev, b * T, (b + 1) * T);
                Tensor dbr = reverse_time(db);
                kern::add_f32(dcells.data() + b * T * (h + p), dbr.data(),
                              dcells.data() + b * T * (h + p), T * (h + p));
            }
        }
    } else {
        dcells = cells.backward(cache.cell_in, cache.cellc, dcell_out);
    }

    Tensor dbn_in = bn.backward(cache.bn, dcells);
    Tensor dx({B * T, h});
    if (p > 0) {
        for (size_t r = 0; r < B * T; ++r) {
            std::memcpy(dx.data() + r * h, dbn_in.data() + r * (h + p),
                        h * sizeof(float));
        }
    } else {
        dx = std::move(dbn_in);
    }
    // Skip connection.
    kern::add_f32(dx.data(), dy.data(), dx.data(), dx.size());
    return dx;
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

void Network::init(Rng& rng, const NetworkConfig& config) {
    cfg = config;
    if (cfg.blocks.empty()) throw std::invalid_argument("network: blocks must be nonempty");
    if (cfg.head_layers < 1) throw std::invalid_argument("network: head_layers >= 1");
    const size_t h = cfg.blocks[0].model_dim;
    for (const auto& b : cfg.blocks) {
        if (b.model_dim != h) {
            throw std::invalid_argument("network: all blocks must share the model dim");
        }
    }
    input_proj.init(rng, cfg.input_dim, h);
    blocks.clear();
    blocks.resize(cfg.blocks.size());
    for (size_t i = 0; i < cfg.blocks.size(); ++i) {
        blocks[i].init(rng, cfg.blocks[i]);
        if (blocks[i].cells.has_bmru) blocks[i].cells.bmru.alpha_surr = cfg.alpha_surr;
        if (cfg.blocks[i].bidirectional && blocks[i].cells_rev.has_bmru) {
            blocks[i].cells_rev.bmru.alpha_surr = cfg.alpha_surr;
        }
    }
    head.clear();
    head.resize(cfg.head_layers);
    for (size_t i = 0; i + 1 < cfg.head_layers; ++i) head[i].init(rng, h, h);
    head[cfg.head_layers - 1].init(rng, h, cfg.output_dim);
}

Tensor Network::forward(const Tensor& x, RunMode mode, Cache& cache) {
    if (x.rank() != 3 || x.dim(2) != cfg.input_dim) {
        throw std::invalid_argument("network_forward: x must be [B, T, input_dim]");
    }
    const size_t B = x.dim(0), T = x.dim(1);
    cache.batch = B;
    cache.steps = T;
    const size_t h = cfg.blocks[0].model_dim;

    cache.x_flat = Tensor({B * T, cfg.input_dim});
    std::memcpy(cache.x_flat.data(), x.data(), x.size() * sizeof(float));
    Tensor cur = input_proj.forward(cache.x_flat);

    cache.block.assign(blocks.size(), Block::Cache{});
    cache.block_in.assign(blocks.size(), Tensor{});
    for (size_t i = 0; i < blocks.size(); ++i) {
        cache.block[i].steps_hint = T;
        cache.block_in[i] = cur;
        cur = blocks[i].forward(cur, mode, cache.block[i]);
    }

    cache.pooled = Tensor({B, h});
    if (cfg.pooling == Pooling::last_timestep) {
        for (size_t b = 0; b < B; ++b) {
            std::memcpy(cache.pooled.data() + b * h,
                        cur.data() + ((b + 1) * T - 1) * h, h * sizeof(float));
        }
    } else {
        for (size_t b = 0; b < B; ++b) {
            for (size_t j = 0; j < h; ++j) {
                double acc = 0.0;
                for (size_t t = 0; t < T; ++t) acc += cur.at(b * T + t, j);
                cache.pooled.at(b, j) = static_cast<float>(acc / static_cast<double>(T));
            }
        }
    }

    cache.head_in.assign(head.size(), Tensor{});
    cache.head_act.assign(head.size(), Tensor{});
    Tensor hcur = cache.pooled;
    for (size_t i = 0; i < head.size(); ++i) {
        cache.head_in[i] = hcur;
        Tensor a = head[i].forward(hcur);
        if (i + 1 < head.size()) {
            cache.head_act[i] = a;
            Tensor act(a.shape());
            for (size_t k = 0; k < a.size(); ++k) act[k] = gelu(a[k]);
            hcur = std::move(act);
        } else {
            hcur = std::move(a);
        }
    }
    return hcur;
}

void Network::backward(const Cache& cache, const Tensor& dl_dpred) {
    const size_t B = cache.batch, T = cache.steps;
    const size_t h = cfg.blocks[0].model_dim;

    Tensor d = dl_dpred;
    for (size_t i = head.size(); i-- > 0;) {
        if (i + 1 < head.size()) {
            Tensor da(d.shape());
            const Tensor& a = cache.head_act[i];
            for (size_t k = 0; k < d.size(); ++k) da[k] = d[k] * gelu_prime(a[k]);
            d = head[i].backward(cache.head_in[i], da);
        } else {
            d = head[i].backward(cache.head_in[i], d);
        }
    }

    Tensor dcur({B * T, h}, 0.0f);
    if (cfg.pooling == Pooling::last_timestep) {
        for (size_t b = 0; b < B; ++b) {
            std::memcpy(dcur.data() + ((b + 1) * T - 1) * h, d.data() + b * h,
                        h * sizeof(float));
        }
    } else {
        const float inv_t = 1.0f / static_cast<float>(T);
        for (size_t b = 0; b < B; ++b) {
            for (size_t t = 0; t < T; ++t) {
                for (size_t j = 0; j < h; ++j) {
                    dcur.at(b * T + t, j) = d.at(b, j) * inv_t;
                }
            }
        }
    }

    for (size_t i = blocks.size(); i-- > 0;) {
        dcur = blocks[i].backward(cache.block_in[i], cache.block[i], dcur);
    }
    input_proj.backward(cache.x_flat, dcur);
}

std::vector<ParamRef> Network::params() {
    std::vector<ParamRef> out;
    auto add = [&](const std::string& name, Tensor& v, Tensor& g, bool bmru_group) {
        out.push_back({name, &v, &g, bmru_group, true});
    };
    auto add_state = [&](const std::string& name, Tensor& v) {
        out.push_back({name, &v, nullptr, false, false});
    };
    auto add_cellset = [&](const std::string& prefix, CellSet& c) {
        if (c.has_bmru) {
            add(prefix + ".bmru.w_x", c.bmru.w_x, c.g.dw_x, true);
            add(prefix + ".bmru.b_x", c.bmru.b_x, c.g.db_x, true);
            add(prefix + ".bmru.w_beta", c.bmru.w_beta, c.g.dw_beta, true);
            add(prefix + ".bmru.b_beta", c.bmru.b_beta, c.g.db_beta, true);
            add(prefix + ".bmru.alpha", c.bmru.alpha, c.g.dalpha, true);
            add(prefix + ".bmru_out.w", c.bmru_out.w, c.bmru_out.dw, false);
            add(prefix + ".bmru_out.b", c.bmru_out.b, c.bmru_out.db, false);
        }
        if (c.has_lru) {
            add(prefix + ".lru.nu", c.lru.nu, c.g.dnu, false);
            add(prefix + ".lru.theta", c.lru.theta, c.g.dtheta, false);
            add(prefix + ".lru.gamma", c.lru.gamma, c.g.dgamma, false);
            add(prefix + ".lru.b_re", c.lru.b_re, c.g.db_re, false);
            add(prefix + ".lru.b_im", c.lru.b_im, c.g.db_im, false);
            add(prefix + ".lru.c_re", c.lru.c_re, c.g.dc_re, false);
            add(prefix + ".lru.c_im", c.lru.c_im, c.g.dc_im, false);
            add(prefix + ".lru.d", c.lru.d, c.g.dd, false);
        }
    };
    add("input_proj.w", input_proj.w, input_proj.dw, false);
    add("input_proj.b", input_proj.b, input_proj.db, false);
    for (size_t i = 0; i < blocks.size(); ++i) {
        const std::string p = "blocks." + std::to_string(i);
        Block& blk = blocks[i];
        add(p + ".bn.scale", blk.bn.scale, blk.bn.dscale, false);
        add(p + ".bn.shift", blk.bn.shift, blk.bn.dshift, false);
        add_state(p + ".bn.running_mean", blk.bn.running_mean);
        add_state(p + ".bn.running_var", blk.bn.running_var);
        add_cellset(p + ".cells", blk.cells);
        if (blk.cfg.bidirectional) {
            add_cellset(p + ".cells_rev", blk.cells_rev);
            add(p + ".bidir_merge.w", blk.bidir_merge.w, blk.bidir_merge.dw, false);
            add(p + ".bidir_merge.b", blk.bidir_merge.b, blk.bidir_merge.db, false);
        }
        add(p + ".glu.w", blk.glu.proj.w, blk.glu.proj.dw, false);
        add(p + ".glu.b", blk.glu.proj.b, blk.glu.proj.db, false);
    }
    for (size_t i = 0; i < head.size(); ++i) {
        const std::string p = "head." + std::to_string(i);
        add(p + ".w", head[i].w, head[i].dw, false);
        add(p + ".b", head[i].b, head[i].db, false);
    }
    return out;
}

void Network::zero_grads() {
    for (auto& p : params()) {
        if (p.grad) p.grad->fill(0.0f);
    }
}

size_t Network::param_count() {
    size_t n = 0;
    for (auto& p : params()) {
        if (p.trainable) n += p.value->size();
    }
    return n;
}

}  // namespace mrulab
