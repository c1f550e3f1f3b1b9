#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stnhcl/models.hpp"

namespace stnhcl::patch {

struct PatchId {
    std::size_t row = 0;
    std::size_t col = 0;

    friend bool operator==(const PatchId&, const PatchId&) = default;
};

/// K spatial positions on one encoder layer's feature map. The same list is
/// used for the source and generated branches, which is what makes row k of
/// both gathered matrices a positive pair.
struct PatchIdList {
    std::size_t layer = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<PatchId> ids;

    std::size_t size() const { return ids.size(); }
    std::size_t linear(std::size_t k) const { return ids[k].row * width + ids[k].col; }
};

template <class T>
struct EmbeddingSet {
    numeric::Var<T> embeddings;  // [K x d], unit rows
    std::size_t layer = 0;
};

// Encoder feature stack of `image` at `layer_ids`, in request order.
template <class T>
models::FeatureStack<T> extract_stack(Binder<T>& params, numeric::Var<T> image,
                                      std::span<const std::size_t> layer_ids, const models::ModelConfig& cfg);

// K distinct positions drawn uniformly without replacement (partial
// Fisher-Yates over the h*w grid). ConfigError when K > h*w.
PatchIdList sample_patch_ids(std::size_t layer, std::size_t height, std::size_t width, std::size_t k,
                             std::mt19937_64& rng);

// [K x c] matrix whose row k is the channel vector at ids[k] of a [c x h x w] map.
template <class T>
numeric::Var<T> gather_patches(numeric::Var<T> feature_map, const PatchIdList& ids);

// Parameter name of the projection head of an encoder layer ("w1", "b1", "w2", "b2").
std::string head_param(std::size_t layer, const std::string& what);

// l2_normalize(relu(P W1 + b1) W2 + b2); the head is shared by both branches.
template <class T>
EmbeddingSet<T> project(numeric::Var<T> patches, Binder<T>& params, std::size_t layer);

}  // namespace stnhcl::patch
