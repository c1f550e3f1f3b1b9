#include "stnhcl/patch_embedding.hpp"

#include <numeric>

namespace stnhcl::patch {

using numeric::Shape;
using numeric::Var;

template <class T>
models::FeatureStack<T> extract_stack(Binder<T>& params, Var<T> image, std::span<const std::size_t> layer_ids,
                                      const models::ModelConfig& cfg) {
    return models::encoder_forward(params, image, layer_ids, cfg);
}

PatchIdList sample_patch_ids(std::size_t layer, std::size_t height, std::size_t width, std::size_t k,
                             std::mt19937_64& rng) {
    const std::size_t n = height * width;
    if (k > n) {
        throw ConfigError("cannot sample " + std::to_string(k) + " patches from a " + std::to_string(height) + "x" +
                          std::to_string(width) + " map");
    }
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    PatchIdList out{layer, height, width, {}};
    out.ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.ids.push_back({pool[i] / width, pool[i] % width});
    return out;
}

template <class T>
Var<T> gather_patches(Var<T> feature_map, const PatchIdList& ids) {
    const auto& s = feature_map.shape();
    if (s.size() != 3) throw DimensionError("gather_patches expects a [c x h x w] map, got " + numeric::shape_str(s));
    if (s[1] != ids.height || s[2] != ids.width) {
        throw DimensionError("patch ids drawn for " + std::to_string(ids.height) + "x" + std::to_string(ids.width) +
                             " but map is " + numeric::shape_str(s));
    }
    std::vector<std::size_t> rows(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (ids.ids[k].row >= s[1] || ids.ids[k].col >= s[2]) {
            throw IndexError("patch (" + std::to_string(ids.ids[k].row) + ", " + std::to_string(ids.ids[k].col) +
                             ") outside " + numeric::shape_str(s));
        }
        rows[k] = ids.linear(k);
    }
    auto positions = numeric::transpose(numeric::reshape(feature_map, Shape{s[0], s[1] * s[2]}));
    return numeric::gather_rows(positions, std::span<const std::size_t>(rows));
}

std::string head_param(std::size_t layer, const std::string& what) {
    return "head." + std::to_string(layer) + "." + what;
}

template <class T>
EmbeddingSet<T> project(Var<T> patches, Binder<T>& params, std::size_t layer) {
    auto w1 = params(head_param(layer, "w1"));
    if (patches.shape().size() != 2 || patches.shape()[1] != w1.shape()[0]) {
        throw ConfigError("projection head " + std::to_string(layer) + " expects " + std::to_string(w1.shape()[0]) +
                          " channels, patches are " + numeric::shape_str(patches.shape()));
    }
    auto h = numeric::relu(numeric::add(numeric::matmul(patches, w1), params(head_param(layer, "b1"))));
    h = numeric::add(numeric::matmul(h, params(head_param(layer, "w2"))), params(head_param(layer, "b2")));
    return {numeric::l2_normalize(h), layer};
}

#define STNHCL_INSTANTIATE(T)                                                                                   \
    template models::FeatureStack<T> extract_stack(Binder<T>&, Var<T>, std::span<const std::size_t>,           \
                                                   const models::ModelConfig&);                                \
    template Var<T> gather_patches(Var<T>, const PatchIdList&);                                                 \
    template EmbeddingSet<T> project(Var<T>, Binder<T>&, std::size_t);

STNHCL_INSTANTIATE(float)
STNHCL_INSTANTIATE(double)
#undef STNHCL_INSTANTIATE

}  // namespace stnhcl::patch
