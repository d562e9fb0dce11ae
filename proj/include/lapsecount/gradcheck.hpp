#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "lapsecount/tensor.hpp"

namespace lapsecount::nn {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    bool ok(double tol) const { return max_rel_err < tol; }
};

/// Verifies analytic gradients against central differences.
///
/// `loss_fn` recomputes the scalar loss from current parameter values and
/// must be deterministic. Analytic grads are expected to be already
/// accumulated in each param's grad tensor. Perturbation h = 1e-5; the
/// relative error per parameter entry is |a - n| / max(|a|, |n|, 1e-8).
inline GradCheckReport gradient_check(const std::function<double()>& loss_fn,
                                      const ParamList& params, double h = 1e-5) {
    GradCheckReport report;
    for (auto& pr : params) {
        Param& p = *pr;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + h;
            const double up = loss_fn();
            p.value[i] = saved - h;
            const double down = loss_fn();
            p.value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p.grad[i];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            const double rel = std::abs(analytic - numeric) / denom;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = p.name;
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace lapsecount::nn
