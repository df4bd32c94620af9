#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rampinn/nn/tensor.hpp"

namespace rampinn::testing {

using nn::Shape;
using TensorD = nn::Tensor<double>;

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

inline TensorD random_leaf(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    return TensorD::leaf(s, random_values(s.numel(), rng, lo, hi));
}

/// Largest normwise relative error max|g_tape - g_fd| / max|g_fd| over all
/// inputs, using central differences with step h. `loss` must rebuild the
/// graph from the current input values on every call.
inline double gradcheck(const std::function<TensorD()>& loss, std::vector<TensorD> inputs, double h = 1e-3) {
    for (auto& t : inputs) t.zero_grad();
    auto l = loss();
    l.backward();
    double worst = 0.0;
    for (auto& t : inputs) {
        std::vector<double> tape(t.grad().begin(), t.grad().end());
        if (tape.empty()) tape.assign(t.numel(), 0.0);
        std::vector<double> fd(t.numel());
        auto v = t.mutable_data();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double keep = v[i];
            v[i] = keep + h;
            const double up = loss().item();
            v[i] = keep - h;
            const double down = loss().item();
            v[i] = keep;
            fd[i] = (up - down) / (2.0 * h);
        }
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < fd.size(); ++i) {
            diff = std::max(diff, std::abs(tape[i] - fd[i]));
            scale = std::max(scale, std::abs(fd[i]));
        }
        worst = std::max(worst, diff / std::max(scale, 1e-12));
    }
    return worst;
}

}  // namespace rampinn::testing
