#include "stnhcl/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stnhcl/numeric/kernels.hpp"

namespace stnhcl::hypergraph {

using numeric::Tensor;
using numeric::Var;

namespace {

template <class T>
T squared_distance(const Tensor<T>& x, std::size_t k, const Tensor<T>& c, std::size_t j, std::size_t dim) {
    T s = 0;
    for (std::size_t d = 0; d < dim; ++d) {
        const T diff = x[k * dim + d] - c[j * dim + d];
        s += diff * diff;
    }
    return s;
}

// Index of the point farthest from every centroid in `active` (ties -> lower index).
template <class T>
std::size_t farthest_point(const Tensor<T>& x, const Tensor<T>& c, const std::vector<std::size_t>& active,
                           std::size_t n, std::size_t dim) {
    std::size_t best = 0;
    T best_d = -1;
    for (std::size_t k = 0; k < n; ++k) {
        T nearest = std::numeric_limits<T>::infinity();
        for (auto j : active) nearest = std::min(nearest, squared_distance(x, k, c, j, dim));
        if (nearest > best_d) {
            best_d = nearest;
            best = k;
        }
    }
    return best;
}

}  // namespace

template <class T>
MembershipMatrix<T> soft_kmeans(const Tensor<T>& features, std::size_t clusters, double temperature,
                                std::size_t iters, std::mt19937_64& rng) {
    if (features.rank() != 2) throw DimensionError("soft_kmeans expects [K x c] features");
    const std::size_t n = features.dim(0), dim = features.dim(1);
    if (clusters < 1 || clusters > n) {
        throw ConfigError("soft_kmeans: need 1 <= M <= K, got M=" + std::to_string(clusters) +
                          " K=" + std::to_string(n));
    }
    if (!(temperature > 0.0)) throw ConfigError("soft_kmeans: temperature must be positive");
    if (iters < 1) throw ConfigError("soft_kmeans: iters must be >= 1");

    MembershipMatrix<T> out;
    out.temperature = temperature;
    out.iterations = iters;
    out.centroids = Tensor<T>({clusters, dim});
    out.m = Tensor<T>({n, clusters});

    auto set_centroid = [&](std::size_t j, std::size_t k) {
        std::copy_n(features.data().begin() + static_cast<long>(k * dim), dim,
                    out.centroids.data().begin() + static_cast<long>(j * dim));
    };

    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    set_centroid(0, first(rng));
    std::vector<std::size_t> active{0};
    for (std::size_t j = 1; j < clusters; ++j) {
        set_centroid(j, farthest_point(features, out.centroids, active, n, dim));
        active.push_back(j);
    }

    Tensor<T> logits({n, clusters});
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < clusters; ++j)
                logits[k * clusters + j] =
                    -squared_distance(features, k, out.centroids, j, dim) / static_cast<T>(temperature);
        numeric::kernels::softmax(n, clusters, 1, logits.data().data(), out.m.data().data());

        for (std::size_t j = 0; j < clusters; ++j) {
            T mass = 0;
            for (std::size_t k = 0; k < n; ++k) mass += out.m[k * clusters + j];
            if (mass < T(1e-12)) {
                std::vector<std::size_t> others;
                for (std::size_t o = 0; o < clusters; ++o)
                    if (o != j) others.push_back(o);
                set_centroid(j, others.empty() ? 0 : farthest_point(features, out.centroids, others, n, dim));
                ++out.reseeds;
                continue;
            }
            for (std::size_t d = 0; d < dim; ++d) {
                T acc = 0;
                for (std::size_t k = 0; k < n; ++k) acc += out.m[k * clusters + j] * features[k * dim + d];
                out.centroids[j * dim + d] = acc / mass;
            }
        }
    }
    return out;
}

Hypergraph::Hypergraph(std::size_t edges, std::size_t nodes)
    : edges_(edges), nodes_(nodes), incidence_(edges * nodes, 0) {}

void Hypergraph::set(std::size_t edge, std::size_t node, bool member) {
    if (edge >= edges_ || node >= nodes_) throw IndexError("hypergraph entry out of range");
    incidence_[edge * nodes_ + node] = member ? 1 : 0;
}

std::size_t Hypergraph::node_degree(std::size_t node) const {
    std::size_t d = 0;
    for (std::size_t e = 0; e < edges_; ++e) d += contains(e, node);
    return d;
}

std::size_t Hypergraph::edge_degree(std::size_t edge) const {
    std::size_t d = 0;
    for (std::size_t k = 0; k < nodes_; ++k) d += contains(edge, k);
    return d;
}

std::vector<std::size_t> Hypergraph::node_degrees() const {
    std::vector<std::size_t> d(nodes_);
    for (std::size_t k = 0; k < nodes_; ++k) d[k] = node_degree(k);
    return d;
}

std::vector<std::size_t> Hypergraph::edge_degrees() const {
    std::vector<std::size_t> d(edges_);
    for (std::size_t e = 0; e < edges_; ++e) d[e] = edge_degree(e);
    return d;
}

Hypergraph Hypergraph::compact() const {
    std::vector<std::size_t> keep;
    for (std::size_t e = 0; e < edges_; ++e)
        if (edge_degree(e) > 0) keep.push_back(e);
    Hypergraph out(keep.size(), nodes_);
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t k = 0; k < nodes_; ++k) out.incidence_[i * nodes_ + k] = incidence_[keep[i] * nodes_ + k];
    return out;
}

Hypergraph Hypergraph::permute_nodes(const std::vector<std::size_t>& perm) const {
    if (perm.size() != nodes_) throw DimensionError("permutation length differs from node count");
    Hypergraph out(edges_, nodes_);
    for (std::size_t e = 0; e < edges_; ++e)
        for (std::size_t k = 0; k < nodes_; ++k) out.incidence_[e * nodes_ + k] = incidence_[e * nodes_ + perm.at(k)];
    return out;
}

template <class T>
Tensor<T> Hypergraph::edge_mean_operator() const {
    Tensor<T> op({edges_, nodes_});
    for (std::size_t e = 0; e < edges_; ++e) {
        const std::size_t d = edge_degree(e);
        if (d == 0) throw ContractError("hyperedge " + std::to_string(e) + " is empty");
        for (std::size_t k = 0; k < nodes_; ++k)
            if (contains(e, k)) op[e * nodes_ + k] = T(1) / static_cast<T>(d);
    }
    return op;
}

template <class T>
Tensor<T> Hypergraph::node_mean_operator() const {
    Tensor<T> op({nodes_, edges_});
    for (std::size_t k = 0; k < nodes_; ++k) {
        const std::size_t d = node_degree(k);
        if (d == 0) throw ContractError("node " + std::to_string(k) + " belongs to no hyperedge");
        for (std::size_t e = 0; e < edges_; ++e)
            if (contains(e, k)) op[k * edges_ + e] = T(1) / static_cast<T>(d);
    }
    return op;
}

template <class T>
Hypergraph build_incidence(const Tensor<T>& membership, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("membership threshold must lie in (0, 1)");
    if (membership.rank() != 2) throw DimensionError("membership must be [K x M]");
    const std::size_t n = membership.dim(0), m = membership.dim(1);
    Hypergraph hg(m, n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t best = 0;
        for (std::size_t e = 0; e < m; ++e) {
            const T v = membership[k * m + e];
            if (v >= static_cast<T>(threshold)) hg.set(e, k);
            if (v > membership[k * m + best]) best = e;
        }
        if (m > 0) hg.set(best, k);
    }
    return hg;
}

std::string hgnn_param(std::size_t layer, Branch branch, const std::string& what) {
    return "hgnn." + std::to_string(layer) + (branch == Branch::input ? ".z." : ".v.") + what;
}

template <class T>
HgnnParams<T> bind_hgnn(Binder<T>& params, std::size_t layer, Branch branch, bool shared, Activation activation,
                        double slope) {
    const Branch b = shared ? Branch::input : branch;
    return {params(hgnn_param(layer, b, "theta1")), params(hgnn_param(layer, b, "theta2")), activation, slope};
}

namespace {
template <class T>
Var<T> activate(Var<T> x, const HgnnParams<T>& p) {
    return p.activation == Activation::identity ? x : numeric::leaky_relu(x, p.slope);
}
}  // namespace

template <class T>
Var<T> hgnn_conv(const Hypergraph& hg, Var<T> nodes, const HgnnParams<T>& params) {
    const auto& s = nodes.shape();
    if (s.size() != 2 || s[0] != hg.num_nodes()) {
        throw ConfigError("hgnn_conv: " + std::to_string(hg.num_nodes()) + "-node hypergraph, features " +
                          numeric::shape_str(s));
    }
    const auto& t1 = params.theta1.shape();
    const auto& t2 = params.theta2.shape();
    if (t1.size() != 2 || t1[0] != s[1] || t2.size() != 2 || t2[0] != t1[1]) {
        throw ConfigError("hgnn_conv: parameter shapes " + numeric::shape_str(t1) + ", " + numeric::shape_str(t2) +
                          " do not fit features " + numeric::shape_str(s));
    }
    const Hypergraph live = hg.compact();
    auto& g = nodes.graph();
    auto to_edges = g.constant(live.edge_mean_operator<T>());
    auto to_nodes = g.constant(live.node_mean_operator<T>());

    auto h = activate(numeric::matmul(nodes, params.theta1), params);
    auto edges = numeric::matmul(to_edges, h);
    auto back = numeric::matmul(to_nodes, activate(edges, params));
    return numeric::matmul(back, params.theta2);
}

#define STNHCL_INSTANTIATE(T)                                                                                \
    template MembershipMatrix<T> soft_kmeans(const Tensor<T>&, std::size_t, double, std::size_t,             \
                                             std::mt19937_64&);                                              \
    template Tensor<T> Hypergraph::edge_mean_operator<T>() const;                                            \
    template Tensor<T> Hypergraph::node_mean_operator<T>() const;                                            \
    template Hypergraph build_incidence(const Tensor<T>&, double);                                           \
    template HgnnParams<T> bind_hgnn(Binder<T>&, std::size_t, Branch, bool, Activation, double);             \
    template Var<T> hgnn_conv(const Hypergraph&, Var<T>, const HgnnParams<T>&);

STNHCL_INSTANTIATE(float)
STNHCL_INSTANTIATE(double)
#undef STNHCL_INSTANTIATE

}  // namespace stnhcl::hypergraph
