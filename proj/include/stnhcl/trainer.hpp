#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stnhcl/config.hpp"
#include "stnhcl/data_synth.hpp"
#include "stnhcl/losses.hpp"
#include "stnhcl/metrics.hpp"
#include "stnhcl/optimizer.hpp"

namespace stnhcl::train {

/// Extra generator-side loss term; receives the source image, the generated
/// image and the target label on the generator's graph. Results are summed
/// into the `aux` slot of the total loss.
using AuxHook = std::function<numeric::Var<float>(numeric::Var<float> source, numeric::Var<float> generated,
                                                  std::size_t label)>;

struct IterationLog {
    std::size_t iter = 0;  // 1-based
    losses::LossReport losses;
    double d_loss = 0.0;
    std::optional<double> css_probe;
};

std::string csv_header();
std::string csv_row(const IterationLog& log);

/// Owns the generator, discriminator and their optimisers. One step() is one
/// generator update followed by one discriminator update (batch size 1).
class Trainer {
public:
    Trainer(RunConfig cfg, synth::Dataset data);

    IterationLog step();
    std::size_t iteration() const noexcept { return iter_; }

    const ParamStore<float>& generator() const noexcept { return gen_; }
    const ParamStore<float>& discriminator() const noexcept { return disc_; }
    // Generator and discriminator parameters in one store (checkpoint contents).
    ParamStore<float> snapshot() const;

    const RunConfig& config() const noexcept { return cfg_; }
    void add_aux_hook(AuxHook hook) { aux_.push_back(std::move(hook)); }
    // Mean CSS over the first few source images translated to every target.
    double css_probe() const;

private:
    RunConfig cfg_;
    synth::Dataset data_;
    models::ModelConfig model_;
    losses::ContrastiveConfig contrastive_;
    std::mt19937_64 rng_;
    ParamStore<float> gen_;
    ParamStore<float> disc_;
    optim::Adam<float> opt_g_;
    optim::Adam<float> opt_d_;
    std::vector<AuxHook> aux_;
    std::size_t iter_ = 0;
};

struct TrainResult {
    std::vector<IterationLog> log;
    std::filesystem::path final_checkpoint;
    ParamStore<float> params;
};

/// Full run: writes <out>/config.txt, <out>/metrics.csv, periodic
/// <out>/ckpt_<iter>.stnh and <out>/final.stnh.
TrainResult train(const RunConfig& cfg);

// Split a checkpoint store into its generator and discriminator halves.
ParamStore<float> generator_part(const ParamStore<float>& params);
ParamStore<float> discriminator_part(const ParamStore<float>& params);

/// Generated image of a [3, n, n] source for one target label.
numeric::Tensor<float> translate(const ParamStore<float>& gen, const numeric::Tensor<float>& source,
                                 std::size_t label, const models::ModelConfig& cfg);

std::size_t label_of(synth::Domain d);

struct EvalRow {
    std::size_t sample = 0;
    synth::Domain domain = synth::Domain::he;
    double css = 0.0;
    double whiteness = 0.0;
};

struct DomainSummary {
    synth::Domain domain = synth::Domain::he;
    metrics::CssReport css;
    double whiteness = 0.0;  // mean background whiteness
};

struct EvalReport {
    std::vector<EvalRow> rows;  // n_eval x n_targets, sample-major
    std::vector<DomainSummary> domains;
};

/// CSS(source, generated) and background whiteness of the generated image
/// (source tissue mask) for the first eval_count source images of the eval
/// split and every target domain.
EvalReport evaluate(const ParamStore<float>& params, const RunConfig& cfg, const synth::Dataset& eval_data);
EvalReport evaluate(const ParamStore<float>& params, const RunConfig& cfg);

std::string eval_json_lines(const EvalReport& report);

struct HeatmapStats {
    std::vector<double> tissue_mean;      // per sample
    std::vector<double> background_mean;  // per sample
    double separated_fraction = 0.0;      // share of samples with tissue_mean > background_mean
};

/// Discriminator heatmap of each generated image, mapped onto the pixel grid,
/// averaged over the source tissue and background masks and over targets.
HeatmapStats heatmap_separation(const ParamStore<float>& params, const RunConfig& cfg,
                                const synth::Dataset& eval_data);

}  // namespace stnhcl::train
