#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "stnhcl/hypergraph.hpp"
#include "stnhcl/models.hpp"
#include "stnhcl/patch_embedding.hpp"
#include "stnhcl/weighting.hpp"

namespace stnhcl::losses {

// All contrastive terms below take unit-norm [K x d] embeddings z (source
// branch) and v (generated branch); row i of each forms the positive pair and
// every v_j, j != i, is a negative for anchor z_i. Scores are z_i.v_j / tau.

// [K x K] cosine similarities z v^T.
template <class T>
numeric::Var<T> similarity(numeric::Var<T> z, numeric::Var<T> v);

// -(1/K) sum_i log( e^{s_ii} / (e^{s_ii} + sum_{j!=i} e^{s_ij}) )
template <class T>
numeric::Var<T> info_nce(numeric::Var<T> z, numeric::Var<T> v, double tau);

// As info_nce with each negative term scaled by w_ij. The diagonal of
// `weights` is ignored; negative weights raise ContractError.
template <class T>
numeric::Var<T> weighted_nce(numeric::Var<T> z, numeric::Var<T> v, numeric::Var<T> weights, double tau);

// weighted_nce with MoNCE softmax weights computed from z v^T.
template <class T>
numeric::Var<T> monce_loss(numeric::Var<T> z, numeric::Var<T> v, double tau, weighting::MonceMode mode,
                           bool detach_weights = true);

// Sum over layers of info_nce between co-located projected patches.
template <class T>
numeric::Var<T> patchnce_loss(const std::vector<patch::EmbeddingSet<T>>& source,
                              const std::vector<patch::EmbeddingSet<T>>& generated, double tau);

struct HypergraphConfig {
    std::size_t hyperedges = 4;
    double threshold = 0.3;
    double temperature = 0.1;
    std::size_t iters = 10;
    hypergraph::Activation activation = hypergraph::Activation::leaky_relu;
    double slope = 0.2;
    bool share_topology = false;  // reuse the source-branch hypergraph for the generated branch
    bool share_params = false;    // one set of HGNN weights for both branches
};

/// Discrete choices of the hypergraph pipeline (incidence matrices, patch
/// partitions). The first pass records them; after rewind() later passes
/// replay the recorded ones in the same order. Fresh values are still
/// computed on every pass so random draws stay in step. Used to hold the
/// structure fixed while finite differences perturb the inputs.
class FrozenStructure {
public:
    void rewind() { graph_pos_ = partition_pos_ = 0; }
    hypergraph::Hypergraph graph(hypergraph::Hypergraph fresh);
    weighting::PatchPartition partition(weighting::PatchPartition fresh);

private:
    std::vector<hypergraph::Hypergraph> graphs_;
    std::vector<weighting::PatchPartition> partitions_;
    std::size_t graph_pos_ = 0;
    std::size_t partition_pos_ = 0;
};

template <class T>
struct HypergraphEmbedding {
    numeric::Var<T> z;  // l2-normalised convolved source nodes
    numeric::Var<T> v;  // l2-normalised convolved generated nodes
    hypergraph::Hypergraph source_graph{0, 0};
    hypergraph::Hypergraph generated_graph{0, 0};
};

// Cluster each branch's patch features, build the hypergraphs and run one HGNN
// layer per branch. Clustering sees values only; gradients flow through the
// convolution.
template <class T>
HypergraphEmbedding<T> hypergraph_embed(numeric::Var<T> source_patches, numeric::Var<T> generated_patches,
                                        Binder<T>& params, std::size_t layer, const HypergraphConfig& cfg,
                                        std::mt19937_64& rng, FrozenStructure* frozen = nullptr);

// info_nce over hypergraph-convolved node embeddings.
template <class T>
numeric::Var<T> sthcl_loss(numeric::Var<T> source_patches, numeric::Var<T> generated_patches, Binder<T>& params,
                           std::size_t layer, const HypergraphConfig& cfg, double tau, std::mt19937_64& rng,
                           FrozenStructure* frozen = nullptr);

// Tissue term (hard patches, region weights for tissue) plus background term
// (easy patches, background weights), each on its own hypergraphs.
template <class T>
numeric::Var<T> stnhcl_loss(numeric::Var<T> source_tissue, numeric::Var<T> generated_tissue,
                            numeric::Var<T> source_background, numeric::Var<T> generated_background,
                            Binder<T>& params, std::size_t layer, const HypergraphConfig& hg_cfg,
                            const weighting::WeightConfig& w_cfg, std::mt19937_64& rng,
                            FrozenStructure* frozen = nullptr);

// Same, gathering the partitioned patches from one layer's feature maps.
template <class T>
numeric::Var<T> stnhcl_loss(const weighting::PatchPartition& partition, numeric::Var<T> source_map,
                            numeric::Var<T> generated_map, Binder<T>& params, const HypergraphConfig& hg_cfg,
                            const weighting::WeightConfig& w_cfg, std::mt19937_64& rng,
                            FrozenStructure* frozen = nullptr);

enum class AdvMode {
    standard,  // d = E[(D(real) - 1)^2] + E[D(fake)^2], g = E[(D(fake) - 1)^2]
    verbatim,  // d = E[D(real)^2] + E[(1 - D(fake))^2], g = E[(1 - D(fake))^2]
};

template <class T>
struct AdversarialLosses {
    numeric::Var<T> d_loss;
    numeric::Var<T> g_loss;
};

// Expectations are taken over the spatial positions of the score maps.
template <class T>
numeric::Var<T> lsgan_d_loss(numeric::Var<T> real_scores, numeric::Var<T> fake_scores,
                             AdvMode mode = AdvMode::standard);
template <class T>
numeric::Var<T> lsgan_g_loss(numeric::Var<T> fake_scores, AdvMode mode = AdvMode::standard);
template <class T>
AdversarialLosses<T> lsgan_losses(numeric::Var<T> real_scores, numeric::Var<T> fake_scores,
                                  AdvMode mode = AdvMode::standard);

struct LayerLoss {
    std::size_t layer = 0;
    double patchnce = 0.0;
    double stnhcl = 0.0;
};

struct LossReport {
    double adv = 0.0;
    double patchnce = 0.0;
    double stnhcl = 0.0;  // hypergraph contrastive term (weighted or not)
    double aux = 0.0;
    double total = 0.0;
    std::vector<LayerLoss> per_layer;
};

// total = lambda1 * (adv + aux) + lambda2 * (stnhcl + patchnce)
LossReport combine_losses(double adv, double patchnce, double stnhcl, double aux, double lambda1, double lambda2);

/// Generator-side terms on one graph; an invalid Var is a disabled term.
template <class T>
struct LossTerms {
    numeric::Var<T> adv;
    numeric::Var<T> patchnce;
    numeric::Var<T> stnhcl;
    numeric::Var<T> aux;
    std::vector<LayerLoss> per_layer;
};

template <class T>
struct TotalLoss {
    numeric::Var<T> total;
    LossReport report;
};

template <class T>
TotalLoss<T> total_generator_loss(numeric::Graph<T>& graph, const LossTerms<T>& terms, double lambda1,
                                  double lambda2);

/// Everything the contrastive stage needs besides the feature stacks.
struct ContrastiveConfig {
    std::size_t num_patches = 64;
    double tau = 0.07;
    bool use_patchnce = true;
    bool use_sthcl = false;   // hypergraph term on the uniform patch sample
    bool use_stnhcl = true;   // heatmap-partitioned, weighted hypergraph term
    std::size_t candidate_factor = 4;  // partition candidate pool = factor * K
    HypergraphConfig hypergraph;
    weighting::WeightConfig weights;
};

template <class T>
struct ContrastiveTerms {
    numeric::Var<T> patchnce;  // invalid when disabled
    numeric::Var<T> hypergraph;
    std::vector<LayerLoss> per_layer;
};

/// PatchNCE and hypergraph contrastive terms for every layer of the stacks.
/// `heatmap` is required when use_stnhcl is set. Randomness (patch sampling,
/// centroid seeding) is drawn from `rng` in a fixed order.
template <class T>
ContrastiveTerms<T> contrastive_losses(Binder<T>& params, const models::FeatureStack<T>& source,
                                       const models::FeatureStack<T>& generated,
                                       const weighting::Heatmap<T>* heatmap, const ContrastiveConfig& cfg,
                                       std::mt19937_64& rng, FrozenStructure* frozen = nullptr);

}  // namespace stnhcl::losses
