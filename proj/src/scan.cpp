#include "mrulab/scan.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "mrulab/kernels.hpp"
#include "mrulab/threadpool.hpp"

namespace mrulab {

namespace {

void check_tape(const RecurrenceTape& tape) {
    if (tape.steps < 1) throw std::invalid_argument("scan: T must be >= 1");
    if (tape.kind == ElemKind::complex_interleaved && tape.dim % 2 != 0) {
        throw std::invalid_argument("scan: complex tape needs even dim");
    }
    if (tape.a.size() != tape.steps * tape.dim ||
        tape.b.size() != tape.steps * tape.dim || tape.h0.size() != tape.dim) {
        throw std::invalid_argument("scan: tape buffer sizes disagree with T x dim");
    }
}

void recur(ElemKind kind, const float* a, const float* b, const float* hprev,
           float* h, size_t n) {
    if (kind == ElemKind::real) {
        kern::recur_real(a, b, hprev, h, n);
    } else {
        kern::recur_cplx(a, b, hprev, h, n);
    }
}

void combine_inplace(ElemKind kind, float* la, float* lb, const float* ra,
                     const float* rb, size_t n) {
    if (kind == ElemKind::real) {
        kern::combine_real(la, lb, ra, rb, la, lb, n);
    } else {
        kern::combine_cplx(la, lb, ra, rb, la, lb, n);
    }
}

// conj of interleaved pairs; identity for real kind.
void adjoint_multiplier(ElemKind kind, const float* a, float* out, size_t n) {
    if (kind == ElemKind::real) {
        std::memcpy(out, a, n * sizeof(float));
    } else {
        for (size_t i = 0; i < n; i += 2) {
            out[i] = a[i];
            out[i + 1] = -a[i + 1];
        }
    }
}

// out = x (.) conj(y) elementwise (plain product for real kind).
void mul_conj(ElemKind kind, const float* x, const float* y, float* out, size_t n) {
    if (kind == ElemKind::real) {
        kern::mul_f32(x, y, out, n);
    } else {
        for (size_t i = 0; i < n; i += 2) {
            const float xr = x[i], xi = x[i + 1];
            const float yr = y[i], yi = y[i + 1];
            out[i] = xr * yr + xi * yi;
            out[i + 1] = xi * yr - xr * yi;
        }
    }
}

}  // namespace

ScanElement combine(const ScanElement& left, const ScanElement& right, ElemKind kind) {
    if (left.a.size() != left.b.size() || left.a.size() != right.a.size() ||
        right.a.size() != right.b.size()) {
        throw std::invalid_argument("combine: element shapes disagree");
    }
    ScanElement out;
    out.a.resize(left.a.size());
    out.b.resize(left.b.size());
    if (kind == ElemKind::real) {
        kern::combine_real(left.a.data(), left.b.data(), right.a.data(),
                           right.b.data(), out.a.data(), out.b.data(), out.a.size());
    } else {
        kern::combine_cplx(left.a.data(), left.b.data(), right.a.data(),
                           right.b.data(), out.a.data(), out.b.data(), out.a.size());
    }
    return out;
}

Tensor scan_sequential(const RecurrenceTape& tape) {
    check_tape(tape);
    const size_t T = tape.steps, d = tape.dim;
    Tensor h({T, d});
    const float* prev = tape.h0.data();
    for (size_t t = 0; t < T; ++t) {
        recur(tape.kind, tape.a.data() + t * d, tape.b.data() + t * d, prev,
              h.data() + t * d, d);
        prev = h.data() + t * d;
    }
    return h;
}

Tensor scan_parallel(const RecurrenceTape& tape, size_t chunk, ScanStats* stats) {
    check_tape(tape);
    if (chunk < 1) throw std::invalid_argument("scan_parallel: chunk must be >= 1");
    const size_t T = tape.steps, d = tape.dim;
    const size_t n_chunks = (T + chunk - 1) / chunk;
    if (stats) {
        stats->chunks = n_chunks;
        stats->combine_calls = 0;
    }
    if (n_chunks == 1) return scan_sequential(tape);

    // Pass 1: per-chunk pair summaries (A_c, B_c) = e_lo (*) ... (*) e_{hi-1},
    // built by folding elements into the running pair.
    std::vector<float> sa(n_chunks * d), sb(n_chunks * d);
    auto& pool = ThreadPool::instance();
    pool.parallel_for(n_chunks, [&](size_t c) {
        const size_t lo = c * chunk;
        const size_t hi = std::min(T, lo + chunk);
        float* A = sa.data() + c * d;
        float* B = sb.data() + c * d;
        std::memcpy(A, tape.a.data() + lo * d, d * sizeof(float));
        std::memcpy(B, tape.b.data() + lo * d, d * sizeof(float));
        for (size_t t = lo + 1; t < hi; ++t) {
            combine_inplace(tape.kind, A, B, tape.a.data() + t * d,
                            tape.b.data() + t * d, d);
        }
    });

    // Combine phase: exclusive summary prefixes E_c = s_0 (*) ... (*) s_{c-1},
    // serial in fixed chunk order.
    std::vector<float> ea(n_chunks * d), eb(n_chunks * d);
    std::memcpy(ea.data() + d, sa.data(), d * sizeof(float));
    std::memcpy(eb.data() + d, sb.data(), d * sizeof(float));
    size_t combines = 0;
    for (size_t c = 2; c < n_chunks; ++c) {
        std::memcpy(ea.data() + c * d, ea.data() + (c - 1) * d, d * sizeof(float));
        std::memcpy(eb.data() + c * d, eb.data() + (c - 1) * d, d * sizeof(float));
        combine_inplace(tape.kind, ea.data() + c * d, eb.data() + c * d,
                        sa.data() + (c - 1) * d, sb.data() + (c - 1) * d, d);
        ++combines;
    }
    if (stats) stats->combine_calls = combines;

    // Pass 2: each chunk restarts from its prefix state and replays the
    // recurrence; chunk results land in disjoint row ranges.
    Tensor h({T, d});
    std::vector<float> starts(n_chunks * d);
    std::memcpy(starts.data(), tape.h0.data(), d * sizeof(float));
    for (size_t c = 1; c < n_chunks; ++c) {
        recur(tape.kind, ea.data() + c * d, eb.data() + c * d, tape.h0.data(),
              starts.data() + c * d, d);
    }
    pool.parallel_for(n_chunks, [&](size_t c) {
        const size_t lo = c * chunk;
        const size_t hi = std::min(T, lo + chunk);
        const float* prev = starts.data() + c * d;
        for (size_t t = lo; t < hi; ++t) {
            recur(tape.kind, tape.a.data() + t * d, tape.b.data() + t * d, prev,
                  h.data() + t * d, d);
            prev = h.data() + t * d;
        }
    });
    return h;
}

ScanBackwardResult scan_backward(const RecurrenceTape& tape, const Tensor& h,
                                 const Tensor& dl_dh) {
    check_tape(tape);
    const size_t T = tape.steps, d = tape.dim;
    if (h.size() != T * d || dl_dh.size() != T * d) {
        throw std::invalid_argument("scan_backward: h/dl_dh shape mismatch");
    }

    // The adjoint g_t = dL_dh_t + a*_{t+1} (.) g_{t+1} is itself a first-order
    // linear recurrence in reversed time; run it through scan_parallel.
    RecurrenceTape rev;
    rev.steps = T;
    rev.dim = d;
    rev.kind = tape.kind;
    rev.a.assign(T * d, 0.0f);
    rev.b.resize(T * d);
    rev.h0.assign(d, 0.0f);
    for (size_t j = 0; j < T; ++j) {
        const size_t i = T - 1 - j;
        std::memcpy(rev.b.data() + j * d, dl_dh.data() + i * d, d * sizeof(float));
        if (j > 0) {
            adjoint_multiplier(tape.kind, tape.a.data() + (i + 1) * d,
                               rev.a.data() + j * d, d);
        }
    }
    const size_t chunk = std::max<size_t>(
        64, (T + 2 * ThreadPool::instance().size() - 1) /
                (2 * ThreadPool::instance().size()));
    Tensor g_rev = scan_parallel(rev, chunk);

    ScanBackwardResult out;
    out.dl_da = Tensor({T, d});
    out.dl_db = Tensor({T, d});
    out.dl_dh0.resize(d);
    for (size_t i = 0; i < T; ++i) {
        const float* g = g_rev.data() + (T - 1 - i) * d;
        std::memcpy(out.dl_db.data() + i * d, g, d * sizeof(float));
        const float* hprev = i == 0 ? tape.h0.data() : h.data() + (i - 1) * d;
        mul_conj(tape.kind, g, hprev, out.dl_da.data() + i * d, d);
    }
    std::vector<float> a0_adj(d);
    adjoint_multiplier(tape.kind, tape.a.data(), a0_adj.data(), d);
    std::vector<float> zeros(d, 0.0f);
    recur(tape.kind, a0_adj.data(), zeros.data(), g_rev.data() + (T - 1) * d,
          out.dl_dh0.data(), d);
    return out;
}

}  // namespace mrulab
