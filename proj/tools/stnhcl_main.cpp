// stnhcl: train, evaluate, synthesise data, run the gradient suite.
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stnhcl/checkpoint.hpp"
#include "stnhcl/config.hpp"
#include "stnhcl/data_synth.hpp"
#include "stnhcl/gradcheck_suite.hpp"
#include "stnhcl/image_io.hpp"
#include "stnhcl/trainer.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailure = 2;

struct RunOptions {
    std::string config;
    std::vector<std::string> overrides;
    bool print_config = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--config", o.config, "key = value configuration file");
    cmd->add_option("--set", o.overrides, "override one key, e.g. --set iterations=100")->take_all();
    cmd->add_flag("--print-config", o.print_config, "print the effective configuration and exit");
}

stnhcl::RunConfig resolve(const RunOptions& o) {
    auto cfg = o.config.empty() ? stnhcl::RunConfig{} : stnhcl::RunConfig::load(o.config);
    for (const auto& kv : o.overrides) cfg.set_assignment(kv);
    return cfg;
}

int cmd_train(stnhcl::RunConfig cfg) {
    cfg.validate();
    std::printf("training %zu iterations, seed %llu, output %s\n", cfg.iterations,
                static_cast<unsigned long long>(cfg.seed), cfg.out.c_str());
    const auto result = stnhcl::train::train(cfg);
    if (!result.log.empty()) {
        const auto& last = result.log.back().losses;
        std::printf("final iteration: adv %.4f  patchnce %.4f  stnhcl %.4f  total %.4f\n", last.adv, last.patchnce,
                    last.stnhcl, last.total);
    }
    std::printf("checkpoint: %s\n", result.final_checkpoint.string().c_str());
    return kOk;
}

int cmd_eval(const stnhcl::RunConfig& cfg, const std::string& ckpt, const std::string& out) {
    cfg.validate();
    const auto params = stnhcl::checkpoint::load(ckpt);
    const auto report = stnhcl::train::evaluate(params, cfg);
    const auto lines = stnhcl::train::eval_json_lines(report);
    if (out.empty())
        std::cout << lines;
    else
        stnhcl::io::write_file(out, lines);
    for (const auto& d : report.domains) {
        std::printf("%-5s n=%zu  css %.4f  whiteness %.4f\n", stnhcl::synth::domain_name(d.domain).c_str(),
                    d.css.values.size(), d.css.mean, d.whiteness);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hypergraph contrastive stain transfer toolkit"};
    app.require_subcommand(1);

    RunOptions train_opts;
    std::uint64_t train_seed = 0;
    std::string train_out;
    auto* train = app.add_subcommand("train", "train a generator/discriminator pair");
    add_run_options(train, train_opts);
    auto* seed_opt = train->add_option("--seed", train_seed, "random seed (overrides the config)");
    auto* out_opt = train->add_option("--out", train_out, "output directory (overrides the config)");

    RunOptions eval_opts;
    std::string ckpt, eval_out;
    auto* eval = app.add_subcommand("eval", "CSS and background whiteness of a checkpoint");
    add_run_options(eval, eval_opts);
    eval->add_option("--checkpoint", ckpt, "checkpoint file");
    eval->add_option("--out", eval_out, "write JSON lines here instead of stdout");

    std::string domains = "he,mas,pas,pasm", synth_out;
    std::size_t n = 0, size = 64;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "write a procedural multi-domain dataset");
    synth->add_option("--domains", domains, "comma-separated domains")->capture_default_str();
    synth->add_option("--n", n, "samples per domain")->required();
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed, "dataset seed")->capture_default_str();
    synth->add_option("--size", size, "image side in pixels")->capture_default_str();

    std::string filter;
    auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every backward rule");
    grad->add_option("--filter", filter, "only checks whose name contains this text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (train->parsed()) {
            auto cfg = resolve(train_opts);
            if (*seed_opt) cfg.seed = train_seed;
            if (*out_opt) cfg.out = train_out;
            if (train_opts.print_config) {
                std::cout << cfg.to_text();
                return kOk;
            }
            return cmd_train(cfg);
        }
        if (eval->parsed()) {
            const auto cfg = resolve(eval_opts);
            if (eval_opts.print_config) {
                std::cout << cfg.to_text();
                return kOk;
            }
            if (ckpt.empty()) throw stnhcl::ConfigError("eval needs --checkpoint");
            return cmd_eval(cfg, ckpt, eval_out);
        }
        if (synth->parsed()) {
            const auto list = stnhcl::synth::parse_domains(domains);
            const auto manifest = stnhcl::synth::make_dataset(n, list, synth_seed, synth_out, size);
            std::printf("wrote %zu images to %s\n", manifest.entries.size(), synth_out.c_str());
            return kOk;
        }
        if (grad->parsed()) {
            const auto result = stnhcl::gradcheck::run_suite(stnhcl::gradcheck::default_cases(), {}, filter);
            std::cout << stnhcl::gradcheck::format_table(result);
            return result.passed ? kOk : kFailure;
        }
    } catch (const stnhcl::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInvalid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
    return kFailure;
}
