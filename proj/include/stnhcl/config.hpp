#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stnhcl/data_synth.hpp"
#include "stnhcl/hypergraph.hpp"
#include "stnhcl/losses.hpp"
#include "stnhcl/models.hpp"
#include "stnhcl/optimizer.hpp"
#include "stnhcl/weighting.hpp"

namespace stnhcl {

/// Every knob of a run. Text form: one `key = value` per line, `#` starts a
/// comment, unknown keys are rejected. Lists are comma separated.
struct RunConfig {
    // data
    std::string data = "data";       // manifest file or directory holding manifest.tsv
    std::string eval_data;           // empty: same as data
    std::size_t eval_count = 50;
    std::size_t image_size = 64;
    std::vector<synth::Domain> domains{synth::Domain::he, synth::Domain::mas, synth::Domain::pas,
                                       synth::Domain::pasm};
    synth::Domain source = synth::Domain::he;

    // schedule
    std::size_t iterations = 2000;
    std::size_t checkpoint_every = 500;  // 0: only the final checkpoint
    std::size_t css_probe_every = 100;   // 0: never
    std::uint64_t seed = 0;
    std::string out = "run";

    // optimisation
    double lr_g = 2e-4;
    double lr_d = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double lambda1 = 10.0;
    double lambda2 = 10.0;
    losses::AdvMode adv = losses::AdvMode::standard;

    // contrastive terms
    std::size_t num_patches = 64;
    std::vector<std::size_t> layers{0, 1};
    std::size_t proj_dim = 64;
    std::size_t hgnn_hidden = 64;
    std::size_t hgnn_out = 64;
    std::size_t hyperedges = 4;
    double membership_threshold = 0.3;
    double kmeans_temperature = 0.1;
    std::size_t kmeans_iters = 10;
    double mu1 = 0.7;
    double sigma1 = 0.5;
    double mu2 = 0.1;
    double sigma2 = 0.5;
    double tau = 0.07;
    weighting::SimilarityDomain similarity_domain = weighting::SimilarityDomain::cosine;
    weighting::Strategy weight_strategy = weighting::Strategy::dual_normal;
    weighting::HeatmapMode heatmap = weighting::HeatmapMode::penultimate;
    hypergraph::Activation hgnn_activation = hypergraph::Activation::leaky_relu;
    bool share_topology = false;
    bool share_hgnn_params = false;
    bool detach_weights = true;

    // ablation switches
    bool use_adv = true;
    bool use_patchnce = true;
    bool use_sthcl = false;
    bool use_stnhcl = true;

    // Assigns one key from its text value (ConfigError on unknown key or bad value).
    void set(const std::string& key, const std::string& value);
    // Applies "key=value" (whitespace around '=' allowed).
    void set_assignment(const std::string& assignment);
    void validate() const;
    // Every key with its current value, in a stable order; parse(to_text()) round-trips.
    std::string to_text() const;

    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);
    static std::vector<std::string> keys();

    std::vector<synth::Domain> targets() const;
    models::ModelConfig model() const;
    losses::ContrastiveConfig contrastive() const;
    optim::AdamConfig adam_generator() const;
    optim::AdamConfig adam_discriminator() const;
    std::filesystem::path eval_path() const { return eval_data.empty() ? data : eval_data; }
};

}  // namespace stnhcl
