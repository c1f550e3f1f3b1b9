#pragma once

#include <cstddef>

#include "stnhcl/models.hpp"
#include "stnhcl/patch_embedding.hpp"

namespace stnhcl::weighting {

// Space the normal pdf is evaluated in: raw cosine similarity z.v, or the
// temperature-scaled logit z.v / tau.
enum class SimilarityDomain { cosine, logit };

enum class Strategy {
    dual_normal,  // normal pdf weights, (mu1, sigma1) on tissue, (mu2, sigma2) on background
    monce_hard,   // softmax(z.v / tau) on both regions
    monce_easy,   // softmax((1 - z.v) / tau) on both regions
    uniform,      // all ones: plain InfoNCE
};

enum class HeatmapMode {
    penultimate,  // channel-wise L2 norm of the discriminator's last hidden map
    output,       // the discriminator's score map for the target label
};

enum class Region { tissue, background };
enum class MonceMode { hard, easy };

struct WeightConfig {
    double mu1 = 0.7;
    double sigma1 = 0.5;
    double mu2 = 0.1;
    double sigma2 = 0.5;
    double tau = 0.07;
    SimilarityDomain domain = SimilarityDomain::cosine;
    Strategy strategy = Strategy::dual_normal;
    bool detach = true;  // weights enter the loss as constants

    void validate() const;
};

/// Spatial statistic of the discriminator on a generated image.
template <class T>
struct Heatmap {
    numeric::Tensor<T> values;  // [h' x w']

    std::size_t height() const { return values.dim(0); }
    std::size_t width() const { return values.dim(1); }
    // Value of the cell nearest to position (row, col) of an fh x fw grid:
    // cell = floor((row + 0.5) * h' / fh).
    T at(std::size_t row, std::size_t col, std::size_t fh, std::size_t fw) const;
};

template <class T>
Heatmap<T> heatmap_from(const models::DiscriminatorOutput<T>& disc, HeatmapMode mode);

template <class T>
Heatmap<T> discriminator_heatmap(const ParamStore<T>& disc_params, const numeric::Tensor<T>& image,
                                 std::size_t label, const models::ModelConfig& cfg,
                                 HeatmapMode mode = HeatmapMode::penultimate);

/// Tissue (hard, high heatmap) and background (easy, low heatmap) patches.
struct PatchPartition {
    patch::PatchIdList hard;
    patch::PatchIdList easy;
};

/// Ranks the candidates by heatmap value (ties: lower linear index ranks
/// lower) and returns the top K as hard and the bottom K as easy. Needs at
/// least 2K candidates.
template <class T>
PatchPartition partition_patches(const Heatmap<T>& heatmap, const patch::PatchIdList& candidates, std::size_t k);

/// w[i][j] = phi(s_ij) / mean_m phi(s_im), phi the N(mu, sigma^2) pdf, with
/// s = sims (cosine) or sims / tau (logit). Rows whose pdf values all fall
/// below 1e-300 get uniform weights of 1.
template <class T>
numeric::Var<T> normal_weights(numeric::Var<T> sims, double mu, double sigma, SimilarityDomain domain = SimilarityDomain::cosine,
                               double tau = 0.07);

/// Row softmax of sims / tau (hard) or (1 - sims) / tau (easy).
template <class T>
numeric::Var<T> monce_weights(numeric::Var<T> sims, double tau, MonceMode mode);

/// Weight matrix for one region under cfg.strategy, detached if cfg.detach.
template <class T>
numeric::Var<T> region_weights(numeric::Var<T> sims, Region region, const WeightConfig& cfg);

}  // namespace stnhcl::weighting
