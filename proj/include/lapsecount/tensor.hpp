#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "lapsecount/rng.hpp"

namespace lapsecount {

/// Dense row-major tensor of doubles. Shapes are small and known at call
/// sites; this is storage plus bounds bookkeeping, not an expression library.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel(shape), 0.0);
    }

    Tensor(std::initializer_list<std::size_t> s) : Tensor(std::vector<std::size_t>(s)) {}

    static std::size_t numel(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t size() const { return data.size(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// A named trainable value with its gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, std::vector<std::size_t> shape)
        : name(std::move(n)), value(shape), grad(std::move(shape)) {}

    /// Glorot-uniform initialization in +/- sqrt(6 / (fan_in + fan_out)).
    void init_glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (auto& v : value.data) v = rng.uniform(-bound, bound);
    }

    void fill(double v) { std::fill(value.data.begin(), value.data.end(), v); }
};

/// Non-owning view used by the optimizer and the gradient checker: any model
/// exposes its parameters as an ordered list of these.
struct ParamRef {
    Param* p;
    Param& operator*() const { return *p; }
    Param* operator->() const { return p; }
};

using ParamList = std::vector<ParamRef>;

inline void zero_grads(const ParamList& params) {
    for (auto& pr : params) pr->grad.zero();
}

inline std::size_t param_count(const ParamList& params) {
    std::size_t n = 0;
    for (auto& pr : params) n += pr->value.size();
    return n;
}

}  // namespace lapsecount
