#include "stnhcl/numeric/graph.hpp"

namespace stnhcl::numeric {

template <class T>
const Tensor<T>& Gradients<T>::of(Var<T> v) const {
    if (v.id() >= shapes_.size()) throw IndexError("gradient requested for a foreign variable");
    const auto& g = by_id_[v.id()];
    if (!g.empty() || shape_numel(shapes_[v.id()]) == 0) return g;
    // Untouched node: hand out a zero tensor of the right shape.
    zero_cache_.push_back(Tensor<T>::zeros(shapes_[v.id()]));
    return zero_cache_.back();
}

template <class T>
const Tensor<T>& Gradients<T>::operator[](const std::string& name) const {
    auto it = named_.find(name);
    if (it == named_.end()) throw IndexError("no gradient for parameter '" + name + "'");
    return it->second;
}

template <class T>
Var<T> Graph<T>::push(Node node) {
    if (consumed_) throw ContractError("graph already consumed by backward()");
    nodes_.push_back(std::move(node));
    return Var<T>(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

template <class T>
Var<T> Graph<T>::constant(Tensor<T> value) {
    value.set_requires_grad(false);
    return push(Node{std::move(value), {}, {}, false});
}

template <class T>
Var<T> Graph<T>::leaf(Tensor<T> value) {
    const bool track = value.requires_grad();
    return push(Node{std::move(value), {}, {}, track});
}

template <class T>
Var<T> Graph<T>::parameter(const std::string& name, Tensor<T> value) {
    value.set_requires_grad(true);
    auto v = push(Node{std::move(value), {}, {}, true});
    named_.emplace_back(name, v.id());
    return v;
}

template <class T>
Var<T> Graph<T>::record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardFn backward) {
    return record(std::move(value), std::vector<Var<T>>(parents), std::move(backward));
}

template <class T>
Var<T> Graph<T>::record(Tensor<T> value, const std::vector<Var<T>>& parents, BackwardFn backward) {
    bool track = false;
    for (const auto& p : parents) {
        if (&p.graph() != this) throw ContractError("operands recorded on different graphs");
        track = track || nodes_[p.id()].requires_grad;
    }
    if (!track) backward = nullptr;
    return push(Node{std::move(value), {}, std::move(backward), track});
}

template <class T>
Tensor<T>* Graph<T>::grad_buffer(Var<T> v) {
    Node& n = nodes_.at(v.id());
    if (!n.requires_grad) return nullptr;
    if (n.grad.empty() && n.value.numel() > 0) n.grad = Tensor<T>::zeros(n.value.shape());
    return &n.grad;
}

template <class T>
Gradients<T> Graph<T>::backward(Var<T> loss) {
    if (&loss.graph() != this) throw ContractError("loss belongs to a different graph");
    if (consumed_) throw ContractError("backward() called twice on the same graph");
    Node& root = nodes_.at(loss.id());
    if (root.value.numel() != 1) {
        throw ContractError("backward() needs a scalar loss, got shape " + shape_str(root.value.shape()));
    }
    consumed_ = true;
    if (root.requires_grad) root.grad = Tensor<T>(root.value.shape(), T(1));

    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.backward || n.grad.empty()) continue;
        n.backward(*this, n.grad);
        n.backward = nullptr;
    }

    Gradients<T> out;
    out.by_id_.reserve(nodes_.size());
    out.shapes_.reserve(nodes_.size());
    for (auto& n : nodes_) {
        out.shapes_.push_back(n.value.shape());
        out.by_id_.push_back(std::move(n.grad));
    }
    for (const auto& [name, id] : named_) {
        const auto& g = out.by_id_[id];
        Tensor<T> stored = g.empty() ? Tensor<T>::zeros(out.shapes_[id]) : g;
        auto [it, inserted] = out.named_.emplace(name, stored);
        if (!inserted) {
            for (std::size_t k = 0; k < stored.numel(); ++k) it->second[k] += stored[k];
        }
    }
    return out;
}

template class Graph<float>;
template class Graph<double>;
template class Gradients<float>;
template class Gradients<double>;

}  // namespace stnhcl::numeric
