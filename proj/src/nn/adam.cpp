#include "rampinn/nn/adam.hpp"

#include <algorithm>
#include <cmath>

#include "rampinn/error.hpp"

namespace rampinn::nn {

template <class T>
void Adam<T>::add(std::string name, Tensor<T> tensor) {
    const std::size_t n = tensor.numel();
    params_.push_back(Parameter<T>{std::move(name), std::move(tensor), std::vector<T>(n, T(0)), std::vector<T>(n, T(0))});
}

template <class T>
double Adam<T>::grad_norm() const {
    double sq = 0.0;
    for (const auto& p : params_) {
        for (T g : p.tensor.grad()) sq += static_cast<double>(g) * g;
    }
    return std::sqrt(sq);
}

template <class T>
double Adam<T>::step() {
    for (const auto& p : params_) {
        for (T g : p.tensor.grad()) {
            if (!std::isfinite(g)) throw Error(ErrorKind::NonFiniteGradient, "non-finite gradient in " + p.name);
        }
    }
    const double norm = grad_norm();
    if (!std::isfinite(norm)) throw Error(ErrorKind::NonFiniteGradient, "gradient norm overflow");
    const double clip = (opts_.clip_norm > 0.0 && norm > opts_.clip_norm) ? opts_.clip_norm / norm : 1.0;

    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    const double step_size = opts_.lr / bc1;
    const T b1 = static_cast<T>(opts_.beta1), b2 = static_cast<T>(opts_.beta2);
    for (auto& p : params_) {
        if (!p.tensor.has_grad()) continue;
        auto w = p.tensor.mutable_data();
        const auto g = p.tensor.grad();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const T gi = static_cast<T>(g[i] * clip);
            p.m[i] = b1 * p.m[i] + (T(1) - b1) * gi;
            p.v[i] = b2 * p.v[i] + (T(1) - b2) * gi * gi;
            const double denom = std::sqrt(p.v[i] / bc2) + opts_.eps;
            w[i] -= static_cast<T>(step_size * p.m[i] / denom);
        }
    }
    return norm;
}

template <class T>
void Adam<T>::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

template class Adam<float>;
template class Adam<double>;

}  // namespace rampinn::nn
