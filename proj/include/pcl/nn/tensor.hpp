#pragma once

// Minimal reverse-mode autodiff core. A Node carries a value buffer, an
// optional gradient buffer, and a closure that pushes its gradient into its
// parents. Ops (see ops.hpp) build a dynamic tape; backward() walks it in
// reverse topological order.
//
// Everything is templated on the scalar type: float for training, double
// for the finite-difference gradient checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "pcl/core.hpp"

namespace pcl::nn {

template <typename T>
struct Node;

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
struct Node {
    std::vector<int> shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool requires_grad = false;  // leaf parameter flag
    std::vector<NodePtr<T>> parents;
    std::function<void(Node<T>&)> backward_fn;

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }

    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
    }

    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
};

template <typename T>
NodePtr<T> make_node(std::vector<int> shape) {
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value.assign(static_cast<std::size_t>(n->numel()), T(0));
    return n;
}

template <typename T>
NodePtr<T> make_input(std::vector<int> shape, std::vector<T> data) {
    auto n = make_node<T>(std::move(shape));
    if (static_cast<std::int64_t>(data.size()) != n->numel())
        throw DimensionError("make_input: data size does not match shape");
    n->value = std::move(data);
    return n;
}

template <typename T>
NodePtr<T> make_param(std::vector<int> shape, Rng& rng, double stddev) {
    auto n = make_node<T>(std::move(shape));
    for (auto& v : n->value) v = static_cast<T>(rng.normal(0.0, stddev));
    n->requires_grad = true;
    n->ensure_grad();
    return n;
}

// Copies the value into a fresh leaf; gradients never flow past it.
template <typename T>
NodePtr<T> detach(const NodePtr<T>& x) {
    auto n = make_node<T>(x->shape);
    n->value = x->value;
    return n;
}

// Reverse sweep from a scalar loss. Throws NumericError if any produced
// gradient is non-finite.
template <typename T>
void backward(const NodePtr<T>& loss) {
    if (loss->numel() != 1) throw DimensionError("backward: loss must be scalar");

    // Iterative post-order DFS for topological order.
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node<T>* p = node->parents[idx++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node<T>* n : order) n->ensure_grad();
    loss->grad[0] = T(1);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }

    for (Node<T>* n : order) {
        if (!n->requires_grad) continue;
        for (const T g : n->grad)
            if (!std::isfinite(static_cast<double>(g))) throw NumericError("backward: non-finite gradient");
    }
}

}  // namespace pcl::nn
