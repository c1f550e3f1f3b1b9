#include "stnhcl/models.hpp"

#include <algorithm>
#include <cmath>

#include "stnhcl/hypergraph.hpp"
#include "stnhcl/patch_embedding.hpp"

namespace stnhcl::models {

using numeric::Shape;
using numeric::Tensor;
using numeric::Var;

namespace {

std::size_t halve(std::size_t n) { return numeric::conv_out_extent(n, 3, 2, 1); }

std::string enc_name(std::size_t b, const char* what) { return "enc." + std::to_string(b) + "." + what; }
std::string dec_name(std::size_t b, const char* what) { return "dec." + std::to_string(b) + "." + what; }
std::string disc_name(std::size_t b, const char* what) { return "disc." + std::to_string(b) + "." + what; }

template <class T>
Var<T> to_signed_range(Var<T> image) {
    return numeric::add_scalar(numeric::scale(image, 2.0), -1.0);
}

template <class T>
Var<T> conditioned(Binder<T>& params, Var<T> h, std::size_t block, std::size_t label) {
    const std::size_t c = h.shape()[0];
    const std::size_t rows[] = {label};
    auto gamma = numeric::reshape(numeric::gather_rows(params(dec_name(block, "gamma")), rows), Shape{c, 1, 1});
    auto beta = numeric::reshape(numeric::gather_rows(params(dec_name(block, "beta")), rows), Shape{c, 1, 1});
    return numeric::add(numeric::mul(h, numeric::add_scalar(gamma, 1.0)), beta);
}

template <class T>
void put_uniform(ParamStore<T>& store, const std::string& name, Shape shape, std::size_t fan_in,
                 std::mt19937_64& rng, InitScheme scheme) {
    if (scheme == InitScheme::zeros) {
        store[name] = Tensor<T>::zeros(std::move(shape));
        return;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    store[name] = Tensor<T>::uniform(std::move(shape), rng, -bound, bound);
}

}  // namespace

Shape encoder_layer_shape(const ModelConfig& cfg, std::size_t layer) {
    if (layer >= cfg.enc_channels.size()) {
        throw ConfigError("encoder has " + std::to_string(cfg.enc_channels.size()) + " layers, no layer " +
                          std::to_string(layer));
    }
    std::size_t n = cfg.image_size;
    for (std::size_t b = 0; b <= layer; ++b) n = halve(n);
    return {cfg.enc_channels[layer], n, n};
}

Shape discriminator_penultimate_shape(const ModelConfig& cfg) {
    std::size_t n = cfg.image_size;
    for (std::size_t b = 0; b < cfg.disc_channels.size(); ++b) n = halve(n);
    return {cfg.disc_channels.back(), n, n};
}

Shape discriminator_map_shape(const ModelConfig& cfg) {
    const auto p = discriminator_penultimate_shape(cfg);
    return {p[1], p[2]};
}

template <class T>
Var<T> image_input(numeric::Graph<T>& g, const Tensor<T>& image, const ModelConfig& cfg) {
    const Shape expected{3, cfg.image_size, cfg.image_size};
    if (image.shape() != expected) {
        throw DimensionError("image shape " + numeric::shape_str(image.shape()) + ", model expects " +
                             numeric::shape_str(expected));
    }
    return g.constant(image);
}

namespace {
template <class T>
std::vector<Var<T>> encode(Binder<T>& params, Var<T> image, std::size_t depth, const ModelConfig& cfg) {
    const Shape expected{3, cfg.image_size, cfg.image_size};
    if (image.shape() != expected) {
        throw DimensionError("encoder input " + numeric::shape_str(image.shape()) + ", expected " +
                             numeric::shape_str(expected));
    }
    std::vector<Var<T>> blocks;
    auto h = to_signed_range(image);
    for (std::size_t b = 0; b < depth; ++b) {
        h = numeric::conv2d(h, params(enc_name(b, "weight")), params(enc_name(b, "bias")), 2, 1);
        h = numeric::leaky_relu(h, cfg.slope);
        blocks.push_back(h);
    }
    return blocks;
}
}  // namespace

template <class T>
FeatureStack<T> encoder_forward(Binder<T>& params, Var<T> image, std::span<const std::size_t> taps,
                                const ModelConfig& cfg) {
    if (taps.empty()) throw ConfigError("at least one encoder layer must be tapped");
    for (auto t : taps) (void)encoder_layer_shape(cfg, t);
    const std::size_t depth = *std::max_element(taps.begin(), taps.end()) + 1;
    auto blocks = encode(params, image, depth, cfg);
    FeatureStack<T> stack;
    for (auto t : taps) {
        stack.layer_ids.push_back(t);
        stack.maps.push_back(blocks[t]);
    }
    return stack;
}

template <class T>
GeneratorOutput<T> generator_forward(Binder<T>& params, Var<T> image, std::size_t label,
                                     std::span<const std::size_t> taps, const ModelConfig& cfg) {
    if (label >= cfg.n_domains) {
        throw ConfigError("unknown stain label " + std::to_string(label) + " (model has " +
                          std::to_string(cfg.n_domains) + " domains)");
    }
    for (auto t : taps) (void)encoder_layer_shape(cfg, t);
    auto blocks = encode(params, image, cfg.enc_channels.size(), cfg);

    GeneratorOutput<T> out;
    for (auto t : taps) {
        out.stack.layer_ids.push_back(t);
        out.stack.maps.push_back(blocks[t]);
    }
    auto h = blocks.back();
    const std::size_t n_blocks = cfg.enc_channels.size();
    for (std::size_t b = 0; b < n_blocks; ++b) {
        h = numeric::upsample_nearest(h, 2);
        h = numeric::conv2d(h, params(dec_name(b, "weight")), params(dec_name(b, "bias")), 1, 1);
        h = conditioned(params, h, b, label);
        h = (b + 1 == n_blocks) ? numeric::sigmoid(h) : numeric::leaky_relu(h, cfg.slope);
    }
    if (h.shape() != image.shape()) {
        throw DimensionError("generator output " + numeric::shape_str(h.shape()) +
                             " does not match input; image size must be divisible by 8");
    }
    out.image = h;
    return out;
}

template <class T>
DiscriminatorOutput<T> discriminator_forward(Binder<T>& params, Var<T> image, std::size_t label,
                                             const ModelConfig& cfg) {
    if (label >= cfg.n_domains) {
        throw ConfigError("unknown stain label " + std::to_string(label));
    }
    const Shape expected{3, cfg.image_size, cfg.image_size};
    if (image.shape() != expected) {
        throw DimensionError("discriminator input " + numeric::shape_str(image.shape()) + ", expected " +
                             numeric::shape_str(expected));
    }
    auto h = to_signed_range(image);
    for (std::size_t b = 0; b < cfg.disc_channels.size(); ++b) {
        h = numeric::conv2d(h, params(disc_name(b, "weight")), params(disc_name(b, "bias")), 2, 1);
        h = numeric::leaky_relu(h, cfg.slope);
    }
    DiscriminatorOutput<T> out;
    out.penultimate = h;
    out.all_scores = numeric::conv2d(h, params("disc.out.weight"), params("disc.out.bias"), 1, 1);
    const std::size_t mh = h.shape()[1], mw = h.shape()[2];
    const std::size_t rows[] = {label};
    auto flat = numeric::reshape(out.all_scores, Shape{cfg.n_domains, mh * mw});
    out.score_map = numeric::reshape(numeric::gather_rows(flat, rows), Shape{mh, mw});
    return out;
}

template <class T>
ParamStore<T> init_generator_params(const ModelConfig& cfg, std::mt19937_64& rng, InitScheme scheme) {
    ParamStore<T> store;
    std::size_t in_c = 3;
    for (std::size_t b = 0; b < cfg.enc_channels.size(); ++b) {
        const std::size_t c = cfg.enc_channels[b];
        put_uniform(store, enc_name(b, "weight"), {c, in_c, 3, 3}, in_c * 9, rng, scheme);
        store[enc_name(b, "bias")] = Tensor<T>::zeros({c});
        in_c = c;
    }
    const std::size_t n_blocks = cfg.enc_channels.size();
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t c = (b + 1 == n_blocks) ? 3 : cfg.enc_channels[n_blocks - 2 - b];
        put_uniform(store, dec_name(b, "weight"), {c, in_c, 3, 3}, in_c * 9, rng, scheme);
        store[dec_name(b, "bias")] = Tensor<T>::zeros({c});
        // Label tables start at U(-0.1, 0.1) so every label already steers the output.
        put_uniform(store, dec_name(b, "gamma"), {cfg.n_domains, c}, 100, rng, scheme);
        put_uniform(store, dec_name(b, "beta"), {cfg.n_domains, c}, 100, rng, scheme);
        in_c = c;
    }
    for (auto layer : cfg.taps) {
        const std::size_t c = encoder_layer_shape(cfg, layer)[0];
        put_uniform(store, patch::head_param(layer, "w1"), {c, cfg.proj_dim}, c, rng, scheme);
        store[patch::head_param(layer, "b1")] = Tensor<T>::zeros({cfg.proj_dim});
        put_uniform(store, patch::head_param(layer, "w2"), {cfg.proj_dim, cfg.proj_dim}, cfg.proj_dim, rng, scheme);
        store[patch::head_param(layer, "b2")] = Tensor<T>::zeros({cfg.proj_dim});

        for (auto branch : {hypergraph::Branch::input, hypergraph::Branch::output}) {
            if (branch == hypergraph::Branch::output && cfg.share_hgnn_params) continue;
            put_uniform(store, hypergraph::hgnn_param(layer, branch, "theta1"), {c, cfg.hgnn_hidden}, c, rng, scheme);
            put_uniform(store, hypergraph::hgnn_param(layer, branch, "theta2"), {cfg.hgnn_hidden, cfg.hgnn_out},
                        cfg.hgnn_hidden, rng, scheme);
        }
    }
    return store;
}

template <class T>
ParamStore<T> init_discriminator_params(const ModelConfig& cfg, std::mt19937_64& rng, InitScheme scheme) {
    ParamStore<T> store;
    std::size_t in_c = 3;
    for (std::size_t b = 0; b < cfg.disc_channels.size(); ++b) {
        const std::size_t c = cfg.disc_channels[b];
        put_uniform(store, disc_name(b, "weight"), {c, in_c, 3, 3}, in_c * 9, rng, scheme);
        store[disc_name(b, "bias")] = Tensor<T>::zeros({c});
        in_c = c;
    }
    put_uniform(store, "disc.out.weight", {cfg.n_domains, in_c, 3, 3}, in_c * 9, rng, scheme);
    store["disc.out.bias"] = Tensor<T>::zeros({cfg.n_domains});
    return store;
}

#define STNHCL_INSTANTIATE(T)                                                                                    \
    template Var<T> image_input(numeric::Graph<T>&, const Tensor<T>&, const ModelConfig&);                       \
    template FeatureStack<T> encoder_forward(Binder<T>&, Var<T>, std::span<const std::size_t>, const ModelConfig&); \
    template GeneratorOutput<T> generator_forward(Binder<T>&, Var<T>, std::size_t, std::span<const std::size_t>,  \
                                                  const ModelConfig&);                                           \
    template DiscriminatorOutput<T> discriminator_forward(Binder<T>&, Var<T>, std::size_t, const ModelConfig&);  \
    template ParamStore<T> init_generator_params(const ModelConfig&, std::mt19937_64&, InitScheme);              \
    template ParamStore<T> init_discriminator_params(const ModelConfig&, std::mt19937_64&, InitScheme);

STNHCL_INSTANTIATE(float)
STNHCL_INSTANTIATE(double)
#undef STNHCL_INSTANTIATE

}  // namespace stnhcl::models
