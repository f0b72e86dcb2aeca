#pragma once

#include <cstdint>

#include "mrulab/tensor.hpp"

namespace mrulab {

// Counter-based generator: output i is a hash of (key, i), so the stream for
// a given seed is identical across runs and thread counts, and split()
// derives independent streams per consumer (data, init, shuffle) -- adding a
// consumer never perturbs the others.
class Rng {
public:
    explicit Rng(uint64_t seed);

    // Independent stream keyed on (this stream, id).
    Rng split(uint64_t id) const;

    uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // N(0, 1), Box-Muller
    // Uniform integer in [0, n), n >= 1.
    uint64_t below(uint64_t n);

    uint64_t seed() const { return seed_; }

private:
    Rng(uint64_t seed, uint64_t key) : seed_(seed), key_(key) {}
    uint64_t seed_;
    uint64_t key_;
    uint64_t counter_ = 0;
};

// Entries uniform in +/- sqrt(6 / (fan_in + fan_out)); shape [fan_out, fan_in].
Tensor init_glorot_uniform(Rng& rng, size_t fan_in, size_t fan_out);

}  // namespace mrulab
