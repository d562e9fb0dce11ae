#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "lapsecount/errors.hpp"
#include "lapsecount/tensor.hpp"

namespace lapsecount::nn {

/// Bias-corrected adaptive-moment optimizer state. Moment buffers are laid
/// out in the order the parameter list was first seen; the same list must be
/// passed to every step.
struct OptimState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

/// One update over all params. Grads must be populated; they are zeroed
/// afterwards. A non-finite gradient aborts with the offending name.
inline void adam_step(const ParamList& params, OptimState& state) {
    if (state.m.empty()) {
        for (auto& pr : params) {
            state.m.emplace_back(pr->value.shape);
            state.v.emplace_back(pr->value.shape);
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = *params[pi];
        Tensor& m = state.m[pi];
        Tensor& v = state.v[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            if (!std::isfinite(g))
                throw NumericError("non-finite gradient in parameter '" + p.name + "'");
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.value[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        p.grad.zero();
    }
}

}  // namespace lapsecount::nn
