#include "stnhcl/losses.hpp"

#include <cmath>

namespace stnhcl::losses {

using numeric::Shape;
using numeric::Tensor;
using numeric::Var;

namespace {

template <class T>
void check_pair(Var<T> z, Var<T> v, const char* op) {
    const auto& zs = z.shape();
    if (zs.size() != 2 || zs != v.shape()) {
        throw DimensionError(std::string(op) + ": embeddings " + numeric::shape_str(zs) + " and " +
                             numeric::shape_str(v.shape()) + " must be matching [K x d]");
    }
    if (zs[0] == 0) throw ContractError(std::string(op) + ": no patches (K = 0)");
}

// Mean over anchors of log(sum_j w'_ij e^{s_ij}) - s_ii, w' having a unit diagonal.
template <class T>
Var<T> nce_from_scores(Var<T> scores, Var<T> negative_weights) {
    auto& g = scores.graph();
    const std::size_t k = scores.shape()[0];
    auto eye = g.constant(Tensor<T>::eye(k));
    auto positives = numeric::sum(numeric::mul(scores, eye), 1);
    auto lse = numeric::weighted_logsumexp(scores, negative_weights);
    return numeric::mean(numeric::sub(lse, positives));
}

}  // namespace

hypergraph::Hypergraph FrozenStructure::graph(hypergraph::Hypergraph fresh) {
    if (graph_pos_ < graphs_.size()) return graphs_[graph_pos_++];
    graphs_.push_back(std::move(fresh));
    return graphs_[graph_pos_++];
}

weighting::PatchPartition FrozenStructure::partition(weighting::PatchPartition fresh) {
    if (partition_pos_ < partitions_.size()) return partitions_[partition_pos_++];
    partitions_.push_back(std::move(fresh));
    return partitions_[partition_pos_++];
}

template <class T>
Var<T> similarity(Var<T> z, Var<T> v) {
    return numeric::matmul(z, numeric::transpose(v));
}

template <class T>
Var<T> info_nce(Var<T> z, Var<T> v, double tau) {
    check_pair(z, v, "info_nce");
    if (!(tau > 0.0)) throw ConfigError("info_nce: tau must be positive");
    auto scores = numeric::scale(similarity(z, v), 1.0 / tau);
    return nce_from_scores(scores, z.graph().constant(Tensor<T>::ones(scores.shape())));
}

template <class T>
Var<T> weighted_nce(Var<T> z, Var<T> v, Var<T> weights, double tau) {
    check_pair(z, v, "weighted_nce");
    if (!(tau > 0.0)) throw ConfigError("weighted_nce: tau must be positive");
    const std::size_t k = z.shape()[0];
    if (weights.shape() != Shape{k, k}) {
        throw DimensionError("weighted_nce: weights must be [" + std::to_string(k) + " x " + std::to_string(k) + "]");
    }
    for (auto w : weights.value().data())
        if (!(w >= T(0))) throw ContractError("weighted_nce: negative or NaN weight");
    auto& g = z.graph();
    Tensor<T> off({k, k}, T(1));
    for (std::size_t i = 0; i < k; ++i) off.at(i, i) = T(0);
    auto w = numeric::add(numeric::mul(weights, g.constant(off)), g.constant(Tensor<T>::eye(k)));
    auto scores = numeric::scale(similarity(z, v), 1.0 / tau);
    return nce_from_scores(scores, w);
}

template <class T>
Var<T> monce_loss(Var<T> z, Var<T> v, double tau, weighting::MonceMode mode, bool detach_weights) {
    check_pair(z, v, "monce_loss");
    auto w = weighting::monce_weights(similarity(z, v), tau, mode);
    return weighted_nce(z, v, detach_weights ? numeric::detach(w) : w, tau);
}

template <class T>
Var<T> patchnce_loss(const std::vector<patch::EmbeddingSet<T>>& source,
                     const std::vector<patch::EmbeddingSet<T>>& generated, double tau) {
    if (source.size() != generated.size() || source.empty()) {
        throw ContractError("patchnce_loss: need the same non-zero number of layers in both branches");
    }
    Var<T> total;
    for (std::size_t l = 0; l < source.size(); ++l) {
        auto term = info_nce(source[l].embeddings, generated[l].embeddings, tau);
        total = total.valid() ? numeric::add(total, term) : term;
    }
    return total;
}

template <class T>
HypergraphEmbedding<T> hypergraph_embed(Var<T> source_patches, Var<T> generated_patches, Binder<T>& params,
                                        std::size_t layer, const HypergraphConfig& cfg, std::mt19937_64& rng,
                                        FrozenStructure* frozen) {
    check_pair(source_patches, generated_patches, "hypergraph_embed");
    auto graph_of = [&](Var<T> patches) {
        auto m = hypergraph::soft_kmeans(patches.value(), cfg.hyperedges, cfg.temperature, cfg.iters, rng);
        auto hg = hypergraph::build_incidence(m.m, cfg.threshold);
        return frozen != nullptr ? frozen->graph(std::move(hg)) : hg;
    };
    HypergraphEmbedding<T> out;
    out.source_graph = graph_of(source_patches);
    out.generated_graph = cfg.share_topology ? out.source_graph : graph_of(generated_patches);

    auto pz = hypergraph::bind_hgnn(params, layer, hypergraph::Branch::input, cfg.share_params, cfg.activation,
                                    cfg.slope);
    auto pv = hypergraph::bind_hgnn(params, layer, hypergraph::Branch::output, cfg.share_params, cfg.activation,
                                    cfg.slope);
    out.z = numeric::l2_normalize(hypergraph::hgnn_conv(out.source_graph, source_patches, pz));
    out.v = numeric::l2_normalize(hypergraph::hgnn_conv(out.generated_graph, generated_patches, pv));
    return out;
}

template <class T>
Var<T> sthcl_loss(Var<T> source_patches, Var<T> generated_patches, Binder<T>& params, std::size_t layer,
                  const HypergraphConfig& cfg, double tau, std::mt19937_64& rng, FrozenStructure* frozen) {
    auto emb = hypergraph_embed(source_patches, generated_patches, params, layer, cfg, rng, frozen);
    return info_nce(emb.z, emb.v, tau);
}

template <class T>
Var<T> stnhcl_loss(Var<T> source_tissue, Var<T> generated_tissue, Var<T> source_background,
                   Var<T> generated_background, Binder<T>& params, std::size_t layer, const HypergraphConfig& hg_cfg,
                   const weighting::WeightConfig& w_cfg, std::mt19937_64& rng, FrozenStructure* frozen) {
    w_cfg.validate();
    auto region_term = [&](Var<T> src, Var<T> gen, weighting::Region region) {
        auto emb = hypergraph_embed(src, gen, params, layer, hg_cfg, rng, frozen);
        auto w = weighting::region_weights(similarity(emb.z, emb.v), region, w_cfg);
        return weighted_nce(emb.z, emb.v, w, w_cfg.tau);
    };
    auto tissue = region_term(source_tissue, generated_tissue, weighting::Region::tissue);
    auto background = region_term(source_background, generated_background, weighting::Region::background);
    return numeric::add(tissue, background);
}

template <class T>
Var<T> stnhcl_loss(const weighting::PatchPartition& partition, Var<T> source_map, Var<T> generated_map,
                   Binder<T>& params, const HypergraphConfig& hg_cfg, const weighting::WeightConfig& w_cfg,
                   std::mt19937_64& rng, FrozenStructure* frozen) {
    return stnhcl_loss(patch::gather_patches(source_map, partition.hard),
                       patch::gather_patches(generated_map, partition.hard),
                       patch::gather_patches(source_map, partition.easy),
                       patch::gather_patches(generated_map, partition.easy), params, partition.hard.layer, hg_cfg,
                       w_cfg, rng, frozen);
}

template <class T>
Var<T> lsgan_d_loss(Var<T> real_scores, Var<T> fake_scores, AdvMode mode) {
    if (mode == AdvMode::standard) return numeric::add(numeric::mse(real_scores, 1.0), numeric::mse(fake_scores, 0.0));
    return numeric::add(numeric::mse(real_scores, 0.0), numeric::mse(fake_scores, 1.0));
}

template <class T>
Var<T> lsgan_g_loss(Var<T> fake_scores, AdvMode) {
    // Both modes penalise (1 - D(G(x)))^2 on the generator side.
    return numeric::mse(fake_scores, 1.0);
}

template <class T>
AdversarialLosses<T> lsgan_losses(Var<T> real_scores, Var<T> fake_scores, AdvMode mode) {
    return {lsgan_d_loss(real_scores, fake_scores, mode), lsgan_g_loss(fake_scores, mode)};
}

LossReport combine_losses(double adv, double patchnce, double stnhcl, double aux, double lambda1, double lambda2) {
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("loss weights must be non-negative");
    LossReport r;
    r.adv = adv;
    r.patchnce = patchnce;
    r.stnhcl = stnhcl;
    r.aux = aux;
    r.total = lambda1 * (adv + aux) + lambda2 * (stnhcl + patchnce);
    return r;
}

template <class T>
TotalLoss<T> total_generator_loss(numeric::Graph<T>& graph, const LossTerms<T>& terms, double lambda1,
                                  double lambda2) {
    auto value = [](Var<T> v) { return v.valid() ? static_cast<double>(v.value().item()) : 0.0; };
    TotalLoss<T> out;
    out.report = combine_losses(value(terms.adv), value(terms.patchnce), value(terms.stnhcl), value(terms.aux),
                                lambda1, lambda2);
    out.report.per_layer = terms.per_layer;

    auto group = [&](Var<T> a, Var<T> b, double lambda) -> Var<T> {
        Var<T> s = a.valid() ? a : b;
        if (a.valid() && b.valid()) s = numeric::add(a, b);
        return s.valid() ? numeric::scale(s, lambda) : Var<T>{};
    };
    auto g1 = group(terms.adv, terms.aux, lambda1);
    auto g2 = group(terms.stnhcl, terms.patchnce, lambda2);
    if (g1.valid() && g2.valid())
        out.total = numeric::add(g1, g2);
    else if (g1.valid() || g2.valid())
        out.total = g1.valid() ? g1 : g2;
    else
        out.total = graph.constant(Tensor<T>::scalar(T(0)));
    return out;
}

template <class T>
ContrastiveTerms<T> contrastive_losses(Binder<T>& params, const models::FeatureStack<T>& source,
                                       const models::FeatureStack<T>& generated, const weighting::Heatmap<T>* heatmap,
                                       const ContrastiveConfig& cfg, std::mt19937_64& rng,
                                       FrozenStructure* frozen) {
    if (source.layer_ids != generated.layer_ids) throw ContractError("feature stacks tapped at different layers");
    if (cfg.use_stnhcl && heatmap == nullptr) throw ContractError("the weighted hypergraph term needs a heatmap");
    ContrastiveTerms<T> out;
    auto accumulate = [](Var<T>& acc, Var<T> term) { acc = acc.valid() ? numeric::add(acc, term) : term; };

    for (std::size_t l = 0; l < source.size(); ++l) {
        const std::size_t layer = source.layer_ids[l];
        Var<T> src_map = source.maps[l];
        Var<T> gen_map = generated.maps[l];
        const std::size_t h = src_map.shape()[1], w = src_map.shape()[2];
        LayerLoss layer_loss{layer, 0.0, 0.0};

        if (cfg.use_patchnce || cfg.use_sthcl) {
            auto ids = patch::sample_patch_ids(layer, h, w, cfg.num_patches, rng);
            auto src = patch::gather_patches(src_map, ids);
            auto gen = patch::gather_patches(gen_map, ids);
            if (cfg.use_patchnce) {
                auto term = info_nce(patch::project(src, params, layer).embeddings,
                                     patch::project(gen, params, layer).embeddings, cfg.tau);
                layer_loss.patchnce = term.value().item();
                accumulate(out.patchnce, term);
            }
            if (cfg.use_sthcl) {
                auto term = sthcl_loss(src, gen, params, layer, cfg.hypergraph, cfg.tau, rng, frozen);
                layer_loss.stnhcl += term.value().item();
                accumulate(out.hypergraph, term);
            }
        }
        if (cfg.use_stnhcl) {
            auto candidates = patch::sample_patch_ids(layer, h, w, cfg.candidate_factor * cfg.num_patches, rng);
            auto partition = weighting::partition_patches(*heatmap, candidates, cfg.num_patches);
            if (frozen != nullptr) partition = frozen->partition(std::move(partition));
            auto wcfg = cfg.weights;
            wcfg.tau = cfg.tau;
            auto term = stnhcl_loss(partition, src_map, gen_map, params, cfg.hypergraph, wcfg, rng, frozen);
            layer_loss.stnhcl += term.value().item();
            accumulate(out.hypergraph, term);
        }
        out.per_layer.push_back(layer_loss);
    }
    return out;
}

#define STNHCL_INSTANTIATE(T)                                                                                   \
    template Var<T> similarity(Var<T>, Var<T>);                                                                 \
    template Var<T> info_nce(Var<T>, Var<T>, double);                                                           \
    template Var<T> weighted_nce(Var<T>, Var<T>, Var<T>, double);                                               \
    template Var<T> monce_loss(Var<T>, Var<T>, double, weighting::MonceMode, bool);                             \
    template Var<T> patchnce_loss(const std::vector<patch::EmbeddingSet<T>>&,                                   \
                                  const std::vector<patch::EmbeddingSet<T>>&, double);                          \
    template HypergraphEmbedding<T> hypergraph_embed(Var<T>, Var<T>, Binder<T>&, std::size_t,                   \
                                                     const HypergraphConfig&, std::mt19937_64&,                 \
                                                     FrozenStructure*);                                         \
    template Var<T> sthcl_loss(Var<T>, Var<T>, Binder<T>&, std::size_t, const HypergraphConfig&, double,        \
                               std::mt19937_64&, FrozenStructure*);                                                             \
    template Var<T> stnhcl_loss(Var<T>, Var<T>, Var<T>, Var<T>, Binder<T>&, std::size_t,                        \
                                const HypergraphConfig&, const weighting::WeightConfig&, std::mt19937_64&,      \
                                FrozenStructure*);                                                              \
    template Var<T> stnhcl_loss(const weighting::PatchPartition&, Var<T>, Var<T>, Binder<T>&,                   \
                                const HypergraphConfig&, const weighting::WeightConfig&, std::mt19937_64&,      \
                                FrozenStructure*);                                                              \
    template Var<T> lsgan_d_loss(Var<T>, Var<T>, AdvMode);                                                      \
    template Var<T> lsgan_g_loss(Var<T>, AdvMode);                                                              \
    template AdversarialLosses<T> lsgan_losses(Var<T>, Var<T>, AdvMode);                                        \
    template TotalLoss<T> total_generator_loss(numeric::Graph<T>&, const LossTerms<T>&, double, double);       \
    template ContrastiveTerms<T> contrastive_losses(Binder<T>&, const models::FeatureStack<T>&,                 \
                                                    const models::FeatureStack<T>&, const weighting::Heatmap<T>*, \
                                                    const ContrastiveConfig&, std::mt19937_64&, FrozenStructure*);

STNHCL_INSTANTIATE(float)
STNHCL_INSTANTIATE(double)
#undef STNHCL_INSTANTIATE

}  // namespace stnhcl::losses
