#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rampinn/nn/tensor.hpp"

namespace rampinn::nn {

template <class T>
struct Parameter {
    std::string name;
    Tensor<T> tensor;
    std::vector<T> m;  // first moment
    std::vector<T> v;  // second moment
};

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;  // <= 0 disables clipping
};

template <class T>
class Adam {
public:
    explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

    void add(std::string name, Tensor<T> tensor);
    std::vector<Parameter<T>>& params() noexcept { return params_; }
    const std::vector<Parameter<T>>& params() const noexcept { return params_; }
    const AdamOptions& options() const noexcept { return opts_; }
    std::uint64_t step_count() const noexcept { return t_; }
    void set_step_count(std::uint64_t t) noexcept { t_ = t; }

    /// L2 norm over all gradients (missing grads count as zero).
    double grad_norm() const;

    /// Clips to the global norm, applies one bias-corrected update, and
    /// increments the step. Throws NonFiniteGradient without touching any
    /// parameter if a gradient is NaN/Inf. Returns the pre-clip norm.
    double step();

    void zero_grad();

private:
    AdamOptions opts_;
    std::vector<Parameter<T>> params_;
    std::uint64_t t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace rampinn::nn
