#pragma once

#include <cmath>
#include <string>

namespace lapsecount::nn {

enum class LossKind { L1, L2 };

inline std::string to_string(LossKind k) { return k == LossKind::L1 ? "l1" : "l2"; }

struct LossValue {
    double value;
    double grad;  // d value / d pred
};

/// L1: |pred - target| with subgradient 0 at equality.
/// L2: (pred - target)^2.
inline LossValue loss(double pred, double target, LossKind kind) {
    const double d = pred - target;
    if (kind == LossKind::L1) {
        const double g = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        return {std::abs(d), g};
    }
    return {d * d, 2.0 * d};
}

}  // namespace lapsecount::nn
