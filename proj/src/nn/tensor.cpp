#include "rampinn/nn/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

#include "rampinn/error.hpp"

namespace rampinn::nn {

namespace {
std::atomic<std::uint64_t> g_node_counter{0};
thread_local bool t_grad_enabled = true;
}  // namespace

std::string to_string(const Shape& s) {
    return "(" + std::to_string(s.batch) + ", " + std::to_string(s.channels) + ", " + std::to_string(s.length) + ")";
}

std::uint64_t next_node_id() noexcept { return ++g_node_counter; }

bool grad_enabled() noexcept { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

template <class T>
Tensor<T> Tensor<T>::constant(Shape shape, std::vector<T> values) {
    if (values.size() != shape.numel()) {
        throw Error(ErrorKind::ShapeMismatch, "tensor data of size " + std::to_string(values.size()) +
                                                  " does not fit shape " + to_string(shape));
    }
    auto n = std::make_shared<Node<T>>();
    n->id = next_node_id();
    n->shape = shape;
    n->value = std::move(values);
    return Tensor(std::move(n));
}

template <class T>
Tensor<T> Tensor<T>::leaf(Shape shape, std::vector<T> values) {
    Tensor t = constant(shape, std::move(values));
    t.node_->requires_grad = true;
    return t;
}

template <class T>
Tensor<T> Tensor<T>::from_op(Shape shape, std::vector<T> values, std::vector<Tensor> inputs,
                             std::function<void(Node<T>&)> backward) {
    Tensor t = constant(shape, std::move(values));
    if (!grad_enabled()) return t;
    const bool needs = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& x) { return x.requires_grad(); });
    if (!needs) return t;
    t.node_->requires_grad = true;
    t.node_->backward = std::move(backward);
    t.node_->parents.reserve(inputs.size());
    for (auto& in : inputs) t.node_->parents.push_back(in.node_);
    return t;
}

template <class T>
void Tensor<T>::backward() {
    if (!node_->requires_grad) return;
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<Node<T>*> stack{node_.get()};
    while (!stack.empty()) {
        Node<T>* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        order.push_back(n);
        for (auto& p : n->parents) {
            if (p->requires_grad) stack.push_back(p.get());
        }
    }
    // Every node is created after its parents, so descending id is a valid
    // reverse topological order.
    std::sort(order.begin(), order.end(), [](const Node<T>* a, const Node<T>* b) { return a->id > b->id; });
    auto& g = node_->ensure_grad();
    std::fill(g.begin(), g.end(), T(1));
    for (Node<T>* n : order) {
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
}

template <class T>
void Tensor<T>::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace rampinn::nn
