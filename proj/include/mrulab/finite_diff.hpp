#pragma once

#include <functional>

#include "mrulab/tensor.hpp"

namespace mrulab {

// Central-difference gradient (f(x+eps*e_i) - f(x-eps*e_i)) / (2*eps) per
// coordinate. The oracle every hand-derived backward pass is checked against.
// Throws if f evaluates to a non-finite value.
Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f,
                              const Tensor& x, double eps);

}  // namespace mrulab
