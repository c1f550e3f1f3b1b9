#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stnhcl/numeric/ops.hpp"
#include "stnhcl/params.hpp"

// Desk-scale networks: a conditional encoder-decoder generator whose encoder
// doubles as the feature extractor for the contrastive losses, and a
// multi-domain PatchGAN-style discriminator.
//
// Generator (image side n, default 64):
//   enc.b : conv3x3 stride 2 pad 1 + leaky-relu, channels 3 -> 16 -> 32 -> 64,
//           extents n/2, n/4, n/8
//   dec.b : nearest x2 upsample, conv3x3 stride 1 pad 1, per-label
//           (1 + gamma) * h + beta, then leaky-relu (sigmoid on the last block)
// Discriminator:
//   disc.b : conv3x3 stride 2 pad 1 + leaky-relu, 3 -> 16 -> 32 -> 64
//   disc.out : conv3x3 stride 1 pad 1, 64 -> n_domains score maps (n/8 x n/8);
//              the map of the requested domain label is the score map.
// Pixels enter both networks rescaled from [0, 1] to [-1, 1].
namespace stnhcl::models {

struct ModelConfig {
    std::size_t image_size = 64;
    std::size_t n_domains = 4;
    std::vector<std::size_t> enc_channels{16, 32, 64};
    std::vector<std::size_t> disc_channels{16, 32, 64};
    double slope = 0.2;
    // Contrastive heads, one per tapped encoder layer.
    std::vector<std::size_t> taps{0, 1};
    std::size_t proj_dim = 64;
    std::size_t hgnn_hidden = 64;
    std::size_t hgnn_out = 64;
    bool share_hgnn_params = false;
};

// [c, h, w] of encoder block `layer`; ConfigError for an unknown layer.
numeric::Shape encoder_layer_shape(const ModelConfig& cfg, std::size_t layer);
numeric::Shape discriminator_penultimate_shape(const ModelConfig& cfg);
// [h', w'] of the discriminator score map.
numeric::Shape discriminator_map_shape(const ModelConfig& cfg);

template <class T>
struct FeatureStack {
    std::vector<std::size_t> layer_ids;
    std::vector<numeric::Var<T>> maps;  // one [c_l, h_l, w_l] map per layer id

    std::size_t size() const { return maps.size(); }
};

template <class T>
FeatureStack<T> encoder_forward(Binder<T>& params, numeric::Var<T> image, std::span<const std::size_t> taps,
                                const ModelConfig& cfg);

template <class T>
struct GeneratorOutput {
    numeric::Var<T> image;
    FeatureStack<T> stack;  // encoder features of the input at `taps`
};

template <class T>
GeneratorOutput<T> generator_forward(Binder<T>& params, numeric::Var<T> image, std::size_t label,
                                     std::span<const std::size_t> taps, const ModelConfig& cfg);

template <class T>
struct DiscriminatorOutput {
    numeric::Var<T> score_map;    // [h', w'] for the requested label
    numeric::Var<T> all_scores;   // [n_domains, h', w']
    numeric::Var<T> penultimate;  // [c, h', w']
};

template <class T>
DiscriminatorOutput<T> discriminator_forward(Binder<T>& params, numeric::Var<T> image, std::size_t label,
                                             const ModelConfig& cfg);

enum class InitScheme {
    fan_in_uniform,  // weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); gamma, beta ~ U(-0.1, 0.1); biases 0
    zeros,
};

// Generator-side parameters: encoder, decoder, label tables, projection heads
// and hypergraph layers. Deterministic per rng state.
template <class T>
ParamStore<T> init_generator_params(const ModelConfig& cfg, std::mt19937_64& rng,
                                    InitScheme scheme = InitScheme::fan_in_uniform);

template <class T>
ParamStore<T> init_discriminator_params(const ModelConfig& cfg, std::mt19937_64& rng,
                                        InitScheme scheme = InitScheme::fan_in_uniform);

// Image tensor [3, n, n] -> graph input; checks the extents against cfg.
template <class T>
numeric::Var<T> image_input(numeric::Graph<T>& g, const numeric::Tensor<T>& image, const ModelConfig& cfg);

}  // namespace stnhcl::models
