#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mrulab {

// Dense row-major array of 32-bit reals. Arrays are value types; every op
// producing a Tensor returns a fresh one, so evaluation is safe to run
// concurrently across independent inputs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<size_t> shape, float fill = 0.0f);
    Tensor(std::initializer_list<size_t> shape, float fill = 0.0f);

    static Tensor from_data(std::vector<size_t> shape, std::vector<float> data);

    const std::vector<size_t>& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    size_t dim(size_t i) const { return shape_[i]; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](size_t i) { return data_[i]; }
    float operator[](size_t i) const { return data_[i]; }
    float& at(size_t i, size_t j) { return data_[i * shape_[1] + j]; }
    float at(size_t i, size_t j) const { return data_[i * shape_[1] + j]; }
    float& at(size_t i, size_t j, size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    float at(size_t i, size_t j, size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    // Row view of a rank-2 tensor / time-slice of a rank-3 tensor.
    std::span<float> row(size_t i) { return {data_.data() + i * row_size(), row_size()}; }
    std::span<const float> row(size_t i) const {
        return {data_.data() + i * row_size(), row_size()};
    }

    void fill(float v);
    bool all_finite() const;
    std::string shape_str() const;

private:
    size_t row_size() const;

    std::vector<size_t> shape_;
    std::vector<float> data_;
};

// Standard matrix product [m,k]x[k,n] -> [m,n]; f64 accumulation in
// increasing-k order per element. Throws on shape mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
// a [m,k] x b[n,k]^T -> [m,n] (b transposed internally).
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// a[k,m]^T x b[k,n] -> [m,n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& m);

}  // namespace mrulab
