#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stnhcl/numeric/ops.hpp"
#include "stnhcl/params.hpp"

namespace stnhcl::hypergraph {

/// Soft k-means result over K nodes and M clusters.
template <class T>
struct MembershipMatrix {
    numeric::Tensor<T> m;          // [K x M], rows sum to 1
    numeric::Tensor<T> centroids;  // [M x c]
    double temperature = 0.0;
    std::size_t iterations = 0;
    std::size_t reseeds = 0;  // empty clusters re-seeded during the run
};

/// Soft k-means with a fixed number of rounds. Each round assigns
///   m[k][j] = softmax_j(-||x_k - c_j||^2 / temperature)
/// and then moves every centroid to the membership-weighted mean of the
/// points. Initial centroids: one point drawn from `rng`, then farthest-point
/// seeding (ties to the lower index). A cluster whose total membership falls
/// below 1e-12 is re-seeded at the point farthest from the remaining
/// centroids, same tie rule.
template <class T>
MembershipMatrix<T> soft_kmeans(const numeric::Tensor<T>& features, std::size_t clusters, double temperature,
                                std::size_t iters, std::mt19937_64& rng);

/// Binary incidence B (M x K, B[i][k] = 1 iff node k is in hyperedge i) with
/// degree vectors.
class Hypergraph {
public:
    Hypergraph(std::size_t edges, std::size_t nodes);

    std::size_t num_edges() const noexcept { return edges_; }
    std::size_t num_nodes() const noexcept { return nodes_; }
    bool contains(std::size_t edge, std::size_t node) const { return incidence_[edge * nodes_ + node] != 0; }
    void set(std::size_t edge, std::size_t node, bool member = true);

    std::size_t node_degree(std::size_t node) const;
    std::size_t edge_degree(std::size_t edge) const;
    std::vector<std::size_t> node_degrees() const;
    std::vector<std::size_t> edge_degrees() const;

    // Copy without zero-degree hyperedges.
    Hypergraph compact() const;

    // Node and hyperedge relabelling: node k of the result is node perm[k] here.
    Hypergraph permute_nodes(const std::vector<std::size_t>& perm) const;

    // D_e^-1 B  ([M x K], row i averages the members of hyperedge i). Needs
    // every hyperedge non-empty.
    template <class T>
    numeric::Tensor<T> edge_mean_operator() const;
    // D_v^-1 B^T ([K x M], row k averages the hyperedges of node k). Needs
    // every node in at least one hyperedge.
    template <class T>
    numeric::Tensor<T> node_mean_operator() const;

    friend bool operator==(const Hypergraph&, const Hypergraph&) = default;

private:
    std::size_t edges_;
    std::size_t nodes_;
    std::vector<std::uint8_t> incidence_;
};

/// B[i][k] = 1 iff m[k][i] >= threshold, plus each node joins its argmax
/// hyperedge (ties to the lower index) so no node is isolated.
template <class T>
Hypergraph build_incidence(const numeric::Tensor<T>& membership, double threshold);

enum class Activation { leaky_relu, identity };

template <class T>
struct HgnnParams {
    numeric::Var<T> theta1;  // [c x d_hidden]
    numeric::Var<T> theta2;  // [d_hidden x d_out]
    Activation activation = Activation::leaky_relu;
    double slope = 0.2;
};

/// Which side of the contrastive pair a hypergraph layer serves.
enum class Branch { input, output };

std::string hgnn_param(std::size_t layer, Branch branch, const std::string& what);

template <class T>
HgnnParams<T> bind_hgnn(Binder<T>& params, std::size_t layer, Branch branch, bool shared,
                        Activation activation = Activation::leaky_relu, double slope = 0.2);

/// Two-step node -> hyperedge -> node message passing:
///   E   = D_e^-1 B act(X Theta1)
///   out = D_v^-1 B^T act(E) Theta2
/// Empty hyperedges are dropped first.
template <class T>
numeric::Var<T> hgnn_conv(const Hypergraph& hg, numeric::Var<T> nodes, const HgnnParams<T>& params);

}  // namespace stnhcl::hypergraph
