#include "stnhcl/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stnhcl::weighting {

using numeric::Shape;
using numeric::Tensor;
using numeric::Var;

void WeightConfig::validate() const {
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw ConfigError("sigma1 and sigma2 must be positive");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
}

template <class T>
T Heatmap<T>::at(std::size_t row, std::size_t col, std::size_t fh, std::size_t fw) const {
    auto cell = [](std::size_t i, std::size_t from, std::size_t to) {
        const auto c = static_cast<std::size_t>((static_cast<double>(i) + 0.5) * static_cast<double>(to) /
                                                static_cast<double>(from));
        return std::min(c, to - 1);
    };
    return values.at(cell(row, fh, height()), cell(col, fw, width()));
}

template <class T>
Heatmap<T> heatmap_from(const models::DiscriminatorOutput<T>& disc, HeatmapMode mode) {
    if (mode == HeatmapMode::output) return {disc.score_map.value()};
    const auto& f = disc.penultimate.value();
    const std::size_t c = f.dim(0), h = f.dim(1), w = f.dim(2);
    Tensor<T> energy({h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            T s = 0;
            for (std::size_t ch = 0; ch < c; ++ch) s += f.at(ch, y, x) * f.at(ch, y, x);
            energy.at(y, x) = std::sqrt(s);
        }
    return {std::move(energy)};
}

template <class T>
Heatmap<T> discriminator_heatmap(const ParamStore<T>& disc_params, const Tensor<T>& image, std::size_t label,
                                 const models::ModelConfig& cfg, HeatmapMode mode) {
    numeric::Graph<T> g;
    Binder<T> params(g, disc_params, false);
    auto out = models::discriminator_forward(params, models::image_input(g, image, cfg), label, cfg);
    return heatmap_from(out, mode);
}

template <class T>
PatchPartition partition_patches(const Heatmap<T>& heatmap, const patch::PatchIdList& candidates, std::size_t k) {
    if (candidates.size() < 2 * k) {
        throw ConfigError("partition needs at least " + std::to_string(2 * k) + " candidates, got " +
                          std::to_string(candidates.size()));
    }
    struct Ranked {
        T value;
        std::size_t linear;
        patch::PatchId id;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& id = candidates.ids[i];
        ranked.push_back({heatmap.at(id.row, id.col, candidates.height, candidates.width), candidates.linear(i), id});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        return a.value != b.value ? a.value < b.value : a.linear < b.linear;
    });
    PatchPartition out;
    out.hard = {candidates.layer, candidates.height, candidates.width, {}};
    out.easy = out.hard;
    for (std::size_t i = 0; i < k; ++i) {
        out.easy.ids.push_back(ranked[i].id);
        out.hard.ids.push_back(ranked[ranked.size() - 1 - i].id);
    }
    return out;
}

template <class T>
Var<T> normal_weights(Var<T> sims, double mu, double sigma, SimilarityDomain domain, double tau) {
    if (!(sigma > 0.0)) throw ConfigError("normal_weights: sigma must be positive");
    if (domain == SimilarityDomain::logit && !(tau > 0.0)) throw ConfigError("normal_weights: tau must be positive");
    if (sims.shape().size() != 2) throw DimensionError("normal_weights expects a [K x K] similarity matrix");
    const std::size_t rows = sims.shape()[0], cols = sims.shape()[1];

    auto arg = domain == SimilarityDomain::logit ? numeric::scale(sims, 1.0 / tau) : sims;
    auto centred = numeric::add_scalar(arg, -mu);
    // log of the unnormalised pdf; the 1/(sigma sqrt(2 pi)) factor cancels in the ratio.
    auto log_pdf = numeric::scale(numeric::mul(centred, centred), -1.0 / (2.0 * sigma * sigma));

    const auto& lv = log_pdf.value();
    const double log_norm = std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
    const double log_floor = std::log(1e-300);
    Tensor<T> row_max({rows, 1});
    Tensor<T> keep({rows, 1}, T(1));
    bool any_fallback = false;
    for (std::size_t i = 0; i < rows; ++i) {
        T mx = lv[i * cols];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, lv[i * cols + j]);
        row_max[i] = mx;
        if (static_cast<double>(mx) - log_norm < log_floor) {
            keep[i] = T(0);
            any_fallback = true;
        }
    }
    auto& g = sims.graph();
    auto e = numeric::exp(numeric::sub(log_pdf, g.constant(row_max)));
    auto w = numeric::div(numeric::scale(e, static_cast<double>(cols)), numeric::sum(e, 1, true));
    if (!any_fallback) return w;
    Tensor<T> fill({rows, 1});
    for (std::size_t i = 0; i < rows; ++i) fill[i] = T(1) - keep[i];
    return numeric::add(numeric::mul(w, g.constant(keep)), g.constant(fill));
}

template <class T>
Var<T> monce_weights(Var<T> sims, double tau, MonceMode mode) {
    if (!(tau > 0.0)) throw ConfigError("monce_weights: tau must be positive");
    if (sims.shape().size() != 2) throw DimensionError("monce_weights expects a [K x K] similarity matrix");
    auto arg = mode == MonceMode::hard ? sims : numeric::add_scalar(numeric::neg(sims), 1.0);
    return numeric::softmax(numeric::scale(arg, 1.0 / tau), 1);
}

template <class T>
Var<T> region_weights(Var<T> sims, Region region, const WeightConfig& cfg) {
    Var<T> w;
    switch (cfg.strategy) {
        case Strategy::dual_normal:
            w = region == Region::tissue ? normal_weights(sims, cfg.mu1, cfg.sigma1, cfg.domain, cfg.tau)
                                         : normal_weights(sims, cfg.mu2, cfg.sigma2, cfg.domain, cfg.tau);
            break;
        case Strategy::monce_hard:
            w = monce_weights(sims, cfg.tau, MonceMode::hard);
            break;
        case Strategy::monce_easy:
            w = monce_weights(sims, cfg.tau, MonceMode::easy);
            break;
        case Strategy::uniform:
            return sims.graph().constant(Tensor<T>::ones(sims.shape()));
    }
    return cfg.detach ? numeric::detach(w) : w;
}

#define STNHCL_INSTANTIATE(T)                                                                                   \
    template struct Heatmap<T>;                                                                                 \
    template Heatmap<T> heatmap_from(const models::DiscriminatorOutput<T>&, HeatmapMode);                       \
    template Heatmap<T> discriminator_heatmap(const ParamStore<T>&, const Tensor<T>&, std::size_t,              \
                                              const models::ModelConfig&, HeatmapMode);                         \
    template PatchPartition partition_patches(const Heatmap<T>&, const patch::PatchIdList&, std::size_t);      \
    template Var<T> normal_weights(Var<T>, double, double, SimilarityDomain, double);                           \
    template Var<T> monce_weights(Var<T>, double, MonceMode);                                                   \
    template Var<T> region_weights(Var<T>, Region, const WeightConfig&);

STNHCL_INSTANTIATE(float)
STNHCL_INSTANTIATE(double)
#undef STNHCL_INSTANTIATE

}  // namespace stnhcl::weighting
