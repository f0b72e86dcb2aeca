#include "mrulab/finite_diff.hpp"

#include <cmath>
#include <stdexcept>

namespace mrulab {

Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f,
                              const Tensor& x, double eps) {
    if (!(eps > 0.0)) {
        throw std::invalid_argument("finite_difference_grad: eps must be > 0");
    }
    Tensor grad(x.shape());
    Tensor probe = x;
    for (size_t i = 0; i < x.size(); ++i) {
        const float orig = probe[i];
        probe[i] = static_cast<float>(orig + eps);
        const double fp = f(probe);
        probe[i] = static_cast<float>(orig - eps);
        const double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("finite_difference_grad: non-finite f");
        }
        grad[i] = static_cast<float>((fp - fm) / (2.0 * eps));
    }
    return grad;
}

}  // namespace mrulab
