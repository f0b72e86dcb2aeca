#pragma once

#include <cstddef>
#include <vector>

#include "mrulab/tensor.hpp"

namespace mrulab {

// First-order linear recurrence h_t = a_t (.) h_{t-1} + b_t evaluated either
// step by step or as a chunked two-pass parallel scan over the associative
// pair operator (a, b). Multipliers are diagonal: either plain elementwise
// reals, or (re,im)-interleaved pairs acting as 2x2 rotation-scalings so the
// same engine runs complex diagonal recurrences.
enum class ElemKind { real, complex_interleaved };

struct ScanElement {
    std::vector<float> a;
    std::vector<float> b;
};

struct RecurrenceTape {
    size_t steps = 0;  // T
    size_t dim = 0;    // floats per element (2x the complex dim)
    ElemKind kind = ElemKind::real;
    std::vector<float> a;   // [T, dim]
    std::vector<float> b;   // [T, dim]
    std::vector<float> h0;  // [dim]
};

struct ScanStats {
    size_t combine_calls = 0;  // invocations in the summary-combine phase
    size_t chunks = 0;
};

// (l.a*r.a, r.a*l.b + r.b); identity element is (1, 0).
ScanElement combine(const ScanElement& left, const ScanElement& right,
                    ElemKind kind = ElemKind::real);

// Reference semantics; returns [T, dim] with rows h_1..h_T (h0 is the
// caller's and is not echoed back).
Tensor scan_sequential(const RecurrenceTape& tape);

// Same result as scan_sequential to 1e-6 abs (bitwise when the multipliers
// are exact 0/1): per-chunk summaries in parallel, summary prefixes combined
// serially with the pair operator, chunks fixed up in parallel.
Tensor scan_parallel(const RecurrenceTape& tape, size_t chunk,
                     ScanStats* stats = nullptr);

struct ScanBackwardResult {
    Tensor dl_da;               // [T, dim]
    Tensor dl_db;               // [T, dim]
    std::vector<float> dl_dh0;  // [dim]
};

// Adjoint of the recurrence: g_t = dL_dh_t + a*_{t+1} (.) g_{t+1}, computed
// via scan_parallel on the time-reversed tape (conjugated multipliers in the
// complex case); dL_db_t = g_t, dL_da_t = g_t (.) conj(h_{t-1}),
// dL_dh0 = a*_1 (.) g_1.
ScanBackwardResult scan_backward(const RecurrenceTape& tape, const Tensor& h,
                                 const Tensor& dl_dh);

}  // namespace mrulab
