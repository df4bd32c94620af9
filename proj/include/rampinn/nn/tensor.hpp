#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rampinn::nn {

/// (batch, channels, length). Weights reuse the same three slots, e.g. a
/// convolution kernel is (out_channels, in_channels, kernel).
struct Shape {
    std::size_t batch = 1;
    std::size_t channels = 1;
    std::size_t length = 1;

    std::size_t numel() const noexcept { return batch * channels * length; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

template <class T>
struct Node {
    std::uint64_t id = 0;
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::vector<T>& ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), T(0));
        return grad;
    }
};

std::uint64_t next_node_id() noexcept;

/// Graph recording is on by default; NoGradGuard disables it for the
/// current thread (inference, validation).
bool grad_enabled() noexcept;

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Handle to a value on the tape. Copies share the node.
template <class T>
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<T> values);
    static Tensor leaf(Shape shape, std::vector<T> values);  // trainable: accumulates grad
    static Tensor zeros(Shape shape) { return constant(shape, std::vector<T>(shape.numel(), T(0))); }

    /// Result node of an op; records parents only when any of them needs grad.
    static Tensor from_op(Shape shape, std::vector<T> values, std::vector<Tensor> inputs,
                          std::function<void(Node<T>&)> backward);

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->value.size(); }
    std::span<const T> data() const { return node_->value; }
    std::span<T> mutable_data() { return node_->value; }
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> mutable_grad() { return node_->ensure_grad(); }
    bool has_grad() const { return !node_->grad.empty(); }
    bool requires_grad() const { return node_->requires_grad; }
    std::uint64_t id() const { return node_->id; }
    T item() const { return node_->value.at(0); }

    /// Seeds d(this)/d(this) = 1 (scalar outputs) and runs the tape in reverse
    /// creation order.
    void backward();
    void zero_grad();

    Node<T>& node() const { return *node_; }
    const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}
    std::shared_ptr<Node<T>> node_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace rampinn::nn
