#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stnhcl/numeric/tensor.hpp"

namespace stnhcl::numeric {

template <class T>
class Graph;

/// Handle to a value recorded on a Graph. Cheap to copy; only valid while the
/// owning graph is alive.
template <class T>
class Var {
public:
    Var() = default;

    bool valid() const noexcept { return graph_ != nullptr; }
    Graph<T>& graph() const { return *graph_; }
    std::uint32_t id() const noexcept { return id_; }
    const Tensor<T>& value() const;
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const;

private:
    friend class Graph<T>;
    Var(Graph<T>* g, std::uint32_t id) : graph_(g), id_(id) {}

    Graph<T>* graph_ = nullptr;
    std::uint32_t id_ = 0;
};

/// Gradients produced by Graph::backward. Named parameters always have an
/// entry (all zeros when the loss does not depend on them).
template <class T>
class Gradients {
public:
    const Tensor<T>& of(Var<T> v) const;
    const Tensor<T>& operator[](const std::string& name) const;
    const std::map<std::string, Tensor<T>>& named() const noexcept { return named_; }

private:
    friend class Graph<T>;
    std::vector<Tensor<T>> by_id_;
    std::vector<Shape> shapes_;
    std::map<std::string, Tensor<T>> named_;
    mutable std::deque<Tensor<T>> zero_cache_;
};

/// Eager tape of recorded operations. Built during a forward pass, consumed by
/// one backward pass. Node ids are assigned in creation order, so reverse id
/// order is a valid topological order.
template <class T>
class Graph {
public:
    // Called with the node's output gradient; pushes contributions into the
    // parents through grad_buffer().
    using BackwardFn = std::function<void(Graph&, const Tensor<T>& out_grad)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var<T> constant(Tensor<T> value);
    // Tracked iff value.requires_grad().
    Var<T> leaf(Tensor<T> value);
    Var<T> parameter(const std::string& name, Tensor<T> value);

    // Records an operation result. `backward` may be empty for
    // non-differentiable results; it is skipped when no parent needs grads.
    Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardFn backward);
    Var<T> record(Tensor<T> value, const std::vector<Var<T>>& parents, BackwardFn backward);

    const Tensor<T>& value(Var<T> v) const { return nodes_.at(v.id()).value; }
    bool requires_grad(Var<T> v) const { return nodes_.at(v.id()).requires_grad; }

    // Zero-initialised gradient accumulator of v, or nullptr when v does not
    // need a gradient. Only meaningful inside a BackwardFn.
    Tensor<T>* grad_buffer(Var<T> v);

    Gradients<T> backward(Var<T> loss);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        BackwardFn backward;
        bool requires_grad = false;
    };

    Var<T> push(Node node);

    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, std::uint32_t>> named_;
    bool consumed_ = false;
};

template <class T>
const Tensor<T>& Var<T>::value() const {
    return graph_->value(*this);
}

template <class T>
bool Var<T>::requires_grad() const {
    return graph_->requires_grad(*this);
}

extern template class Graph<float>;
extern template class Graph<double>;
extern template class Gradients<float>;
extern template class Gradients<double>;

}  // namespace stnhcl::numeric
