#include "mrulab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mrulab {

// splitmix64 finalizer; full-period mix of a 64-bit word.
static uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

Rng::Rng(uint64_t seed) : seed_(seed), key_(mix64(seed)) {}

Rng Rng::split(uint64_t id) const {
    return Rng(seed_, mix64(key_ ^ mix64(id + 0xA5A5A5A5A5A5A5A5ull)));
}

uint64_t Rng::next_u64() { return mix64(key_ + counter_++ * 0xD1B54A32D192ED03ull); }

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    // Box-Muller; u1 kept away from 0 so the log is finite.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t Rng::below(uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64, the
    // bias is < n/2^64 and irrelevant for shuffles/splits.
    return next_u64() % n;
}

Tensor init_glorot_uniform(Rng& rng, size_t fan_in, size_t fan_out) {
    if (fan_in < 1 || fan_out < 1) {
        throw std::invalid_argument("init_glorot_uniform: fans must be >= 1");
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_out, fan_in});
    for (size_t i = 0; i < w.size(); ++i) {
        w[i] = static_cast<float>(rng.uniform(-limit, limit));
    }
    return w;
}

}  // namespace mrulab
