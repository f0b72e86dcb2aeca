#include "mrulab/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mrulab/kernels.hpp"

namespace mrulab {

static size_t shape_product(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<size_t> shape, float fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::initializer_list<size_t> shape, float fill)
    : Tensor(std::vector<size_t>(shape), fill) {}

Tensor Tensor::from_data(std::vector<size_t> shape, std::vector<float> data) {
    if (shape_product(shape) != data.size()) {
        throw std::invalid_argument("Tensor::from_data: shape/data size mismatch");
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

size_t Tensor::row_size() const {
    size_t rs = 1;
    for (size_t i = 1; i < shape_.size(); ++i) rs *= shape_[i];
    return rs;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw std::invalid_argument("matmul: rank-2 tensors required, got " +
                                    a.shape_str() + " x " + b.shape_str());
    }
    if (a.dim(1) != b.dim(0)) {
        throw std::invalid_argument("matmul: inner extents disagree, " +
                                    a.shape_str() + " x " + b.shape_str());
    }
    Tensor c({a.dim(0), b.dim(1)});
    kern::matmul_f32(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    return matmul(a, transpose(b));
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    return matmul(transpose(a), b);
}

Tensor transpose(const Tensor& m) {
    if (m.rank() != 2) {
        throw std::invalid_argument("transpose: rank-2 tensor required");
    }
    Tensor out({m.dim(1), m.dim(0)});
    kern::transpose_f32(m.data(), out.data(), m.dim(0), m.dim(1));
    return out;
}

}  // namespace mrulab
