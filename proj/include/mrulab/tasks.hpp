#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrulab/rng.hpp"
#include "mrulab/tensor.hpp"

namespace mrulab {

struct Dataset {
    Tensor x;  // [n, T, F]
    Tensor y;  // [n, output_dim] targets, or [n, 1] class labels
    bool classification = false;
    size_t num_classes = 0;

    size_t size() const { return x.empty() ? 0 : x.dim(0); }
    size_t steps() const { return x.dim(1); }
    size_t features() const { return x.dim(2); }
};

// Copy-first-input: inputs [T, 2] with column 0 a real value (r_1 ~ N(0,1),
// r_t ~ N(0, noise_sigma^2) for t > 1) and column 1 a flag set only at the
// first timestep; the target is r_1.
Dataset gen_copy_first_input(Rng& rng, size_t n, size_t steps, double noise_sigma);

// Binary retention: input[0] is +/-1, everything after is 0; target input[0].
Dataset gen_binary_retention(Rng& rng, size_t n, size_t steps);

struct RawMnist {
    size_t count = 0;
    std::vector<uint8_t> images;  // [count, 784], row-major 28x28
    std::vector<uint8_t> labels;  // [count]
};

// IDX format: big-endian magic 0x00000803 (images) / 0x00000801 (labels),
// then dims, then bytes. Distinct errors for bad magic, truncation, and
// image/label count mismatch.
RawMnist load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// One fixed permutation of the 784 pixel positions (drawn from perm_seed)
// applied to every image; pad raw zero (black) pixels appended after the
// permuted pixels; normalization p/255 - 0.5 applied last, so padding
// normalizes like any black pixel.
Dataset make_permuted_padded(const RawMnist& raw, uint64_t perm_seed, size_t pad);

// Seed-stable disjoint split; the first part has round(n * (1 - valid_fraction))
// shuffled samples.
void split_dataset(const Dataset& full, double valid_fraction, Rng& rng,
                   Dataset* train, Dataset* valid);

Dataset subset(const Dataset& ds, size_t count);

// Flat little-endian f32 blobs + JSON manifest (shape, seed, task, version).
void save_dataset(const Dataset& ds, const std::string& dir,
                  const std::string& task, uint64_t seed);
Dataset load_dataset(const std::string& dir);

}  // namespace mrulab
