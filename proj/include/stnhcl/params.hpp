#pragma once

#include <map>
#include <string>

#include "stnhcl/numeric/graph.hpp"

namespace stnhcl {

// Named parameter tensors. Ordered so iteration (and serialisation) is stable.
template <class T>
using ParamStore = std::map<std::string, numeric::Tensor<T>>;

/// Binds store entries to graph variables on first use. With `track` the
/// parameters become named, gradient-carrying leaves; otherwise constants.
template <class T>
class Binder {
public:
    Binder(numeric::Graph<T>& graph, const ParamStore<T>& store, bool track)
        : graph_(graph), store_(store), track_(track) {}

    numeric::Var<T> operator()(const std::string& name) {
        if (auto it = bound_.find(name); it != bound_.end()) return it->second;
        auto found = store_.find(name);
        if (found == store_.end()) throw ConfigError("missing parameter '" + name + "'");
        auto v = track_ ? graph_.parameter(name, found->second) : graph_.constant(found->second);
        bound_.emplace(name, v);
        return v;
    }

    // Uses an existing graph variable for `name` instead of the store entry.
    void bind(const std::string& name, numeric::Var<T> v) { bound_[name] = v; }

    bool contains(const std::string& name) const { return bound_.count(name) != 0 || store_.count(name) != 0; }
    numeric::Graph<T>& graph() { return graph_; }

private:
    numeric::Graph<T>& graph_;
    const ParamStore<T>& store_;
    bool track_;
    std::map<std::string, numeric::Var<T>> bound_;
};

}  // namespace stnhcl
