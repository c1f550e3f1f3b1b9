#include "stnhcl/trainer.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "stnhcl/checkpoint.hpp"
#include "stnhcl/image_io.hpp"

namespace stnhcl::train {

using numeric::Graph;
using numeric::Tensor;
using numeric::Var;

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void check_dataset(const synth::Dataset& data, const RunConfig& cfg, bool need_targets) {
    if (data.image_size() != cfg.image_size) {
        throw ConfigError("dataset images are " + std::to_string(data.image_size()) + " pixels wide, config says " +
                          std::to_string(cfg.image_size));
    }
    (void)data.of(cfg.source);
    if (need_targets)
        for (auto d : cfg.targets()) (void)data.of(d);
}

}  // namespace

std::size_t label_of(synth::Domain d) { return static_cast<std::size_t>(d); }

std::string csv_header() { return "iter,loss_adv,loss_patchnce,loss_stnhcl,loss_aux,loss_total,css_probe"; }

std::string csv_row(const IterationLog& log) {
    const auto& l = log.losses;
    return std::to_string(log.iter) + "," + fmt(l.adv) + "," + fmt(l.patchnce) + "," + fmt(l.stnhcl) + "," +
           fmt(l.aux) + "," + fmt(l.total) + "," + (log.css_probe ? fmt(*log.css_probe) : std::string());
}

Trainer::Trainer(RunConfig cfg, synth::Dataset data)
    : cfg_(std::move(cfg)),
      data_(std::move(data)),
      model_(cfg_.model()),
      contrastive_(cfg_.contrastive()),
      rng_(cfg_.seed),
      opt_g_(cfg_.adam_generator()),
      opt_d_(cfg_.adam_discriminator()) {
    cfg_.validate();
    check_dataset(data_, cfg_, true);
    gen_ = models::init_generator_params<float>(model_, rng_);
    disc_ = models::init_discriminator_params<float>(model_, rng_);
}

IterationLog Trainer::step() {
    ++iter_;
    const auto& sources = data_.of(cfg_.source);
    const auto targets = cfg_.targets();
    const auto& source = sources[pick(rng_, sources.size())];
    const auto target = targets[pick(rng_, targets.size())];
    const auto& reals = data_.of(target);
    const auto& real = reals[pick(rng_, reals.size())];
    const std::size_t label = label_of(target);

    IterationLog log;
    log.iter = iter_;
    Tensor<float> fake;
    {
        Graph<float> g;
        Binder<float> gp(g, gen_, true);
        Binder<float> dp(g, disc_, false);
        auto x = models::image_input(g, source.image, model_);
        auto out = models::generator_forward(gp, x, label, cfg_.layers, model_);

        losses::LossTerms<float> terms;
        std::optional<weighting::Heatmap<float>> heatmap;
        if (cfg_.use_adv || cfg_.use_stnhcl) {
            auto d = models::discriminator_forward(dp, out.image, label, model_);
            if (cfg_.use_adv) terms.adv = losses::lsgan_g_loss(d.score_map, cfg_.adv);
            if (cfg_.use_stnhcl) heatmap = weighting::heatmap_from(d, cfg_.heatmap);
        }
        if (cfg_.use_patchnce || cfg_.use_sthcl || cfg_.use_stnhcl) {
            auto generated = models::encoder_forward(gp, out.image, cfg_.layers, model_);
            auto ct = losses::contrastive_losses(gp, out.stack, generated, heatmap ? &*heatmap : nullptr,
                                                 contrastive_, rng_);
            terms.patchnce = ct.patchnce;
            terms.stnhcl = ct.hypergraph;
            terms.per_layer = std::move(ct.per_layer);
        }
        for (auto& hook : aux_) {
            auto a = hook(x, out.image, label);
            terms.aux = terms.aux.valid() ? numeric::add(terms.aux, a) : a;
        }
        auto total = losses::total_generator_loss(g, terms, cfg_.lambda1, cfg_.lambda2);
        log.losses = total.report;
        fake = out.image.value();
        auto grads = g.backward(total.total);
        opt_g_.step(gen_, grads.named());
    }
    if (cfg_.use_adv) {
        Graph<float> g;
        Binder<float> dp(g, disc_, true);
        auto d_real = models::discriminator_forward(dp, models::image_input(g, real.image, model_), label, model_);
        auto d_fake = models::discriminator_forward(dp, g.constant(fake), label, model_);
        auto d_loss = losses::lsgan_d_loss(d_real.score_map, d_fake.score_map, cfg_.adv);
        log.d_loss = d_loss.value().item();
        auto grads = g.backward(d_loss);
        opt_d_.step(disc_, grads.named());
    }
    return log;
}

ParamStore<float> Trainer::snapshot() const {
    ParamStore<float> all = gen_;
    all.insert(disc_.begin(), disc_.end());
    return all;
}

double Trainer::css_probe() const {
    const auto& sources = data_.of(cfg_.source);
    const std::size_t n = std::min<std::size_t>(4, sources.size());
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (auto t : cfg_.targets()) {
            total += metrics::css(sources[i].image, translate(gen_, sources[i].image, label_of(t), model_));
            ++count;
        }
    return total / static_cast<double>(count);
}

ParamStore<float> generator_part(const ParamStore<float>& params) {
    ParamStore<float> out;
    for (const auto& [k, v] : params)
        if (k.rfind("disc.", 0) != 0) out.emplace(k, v);
    return out;
}

ParamStore<float> discriminator_part(const ParamStore<float>& params) {
    ParamStore<float> out;
    for (const auto& [k, v] : params)
        if (k.rfind("disc.", 0) == 0) out.emplace(k, v);
    return out;
}

Tensor<float> translate(const ParamStore<float>& gen, const Tensor<float>& source, std::size_t label,
                        const models::ModelConfig& cfg) {
    Graph<float> g;
    Binder<float> params(g, gen, false);
    return models::generator_forward(params, models::image_input(g, source, cfg), label, {}, cfg).image.value();
}

TrainResult train(const RunConfig& cfg) {
    cfg.validate();
    Trainer trainer(cfg, synth::load_dataset(synth::read_manifest(cfg.data)));

    const std::filesystem::path out(cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory '" + out.string() + "': " + ec.message());
    io::write_file(out / "config.txt", cfg.to_text());

    std::ofstream csv(out / "metrics.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write '" + (out / "metrics.csv").string() + "'");
    csv << csv_header() << '\n';

    TrainResult result;
    for (std::size_t i = 0; i < cfg.iterations; ++i) {
        auto log = trainer.step();
        if (cfg.css_probe_every != 0 && log.iter % cfg.css_probe_every == 0) log.css_probe = trainer.css_probe();
        csv << csv_row(log) << '\n';
        csv.flush();
        if (cfg.checkpoint_every != 0 && log.iter % cfg.checkpoint_every == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "ckpt_%06zu.stnh", log.iter);
            checkpoint::save(out / name, trainer.snapshot());
        }
        result.log.push_back(std::move(log));
    }
    result.params = trainer.snapshot();
    result.final_checkpoint = out / "final.stnh";
    checkpoint::save(result.final_checkpoint, result.params);
    return result;
}

EvalReport evaluate(const ParamStore<float>& params, const RunConfig& cfg, const synth::Dataset& eval_data) {
    cfg.validate();
    check_dataset(eval_data, cfg, false);
    const auto model = cfg.model();
    const auto gen = generator_part(params);
    const auto& sources = eval_data.of(cfg.source);
    const std::size_t n = std::min(cfg.eval_count, sources.size());
    const auto targets = cfg.targets();

    EvalReport report;
    std::vector<std::vector<double>> css(targets.size()), white(targets.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < targets.size(); ++t) {
            const auto fake = translate(gen, sources[i].image, label_of(targets[t]), model);
            EvalRow row{i, targets[t], metrics::css(sources[i].image, fake),
                        metrics::background_whiteness(fake, sources[i].mask)};
            css[t].push_back(row.css);
            white[t].push_back(row.whiteness);
            report.rows.push_back(row);
        }
    for (std::size_t t = 0; t < targets.size(); ++t)
        report.domains.push_back({targets[t], metrics::summarize(css[t]), metrics::summarize(white[t]).mean});
    return report;
}

EvalReport evaluate(const ParamStore<float>& params, const RunConfig& cfg) {
    return evaluate(params, cfg, synth::load_dataset(synth::read_manifest(cfg.eval_path())));
}

std::string eval_json_lines(const EvalReport& report) {
    std::string out;
    for (const auto& r : report.rows) {
        nlohmann::json j = {{"sample", r.sample},
                            {"domain", synth::domain_name(r.domain)},
                            {"css", r.css},
                            {"whiteness", r.whiteness}};
        out += j.dump() + "\n";
    }
    return out;
}

HeatmapStats heatmap_separation(const ParamStore<float>& params, const RunConfig& cfg,
                                const synth::Dataset& eval_data) {
    cfg.validate();
    check_dataset(eval_data, cfg, false);
    const auto model = cfg.model();
    const auto gen = generator_part(params);
    const auto disc = discriminator_part(params);
    const auto& sources = eval_data.of(cfg.source);
    const std::size_t n = std::min(cfg.eval_count, sources.size());
    const auto targets = cfg.targets();
    const std::size_t side = cfg.image_size;

    HeatmapStats stats;
    std::size_t separated = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& mask = sources[i].mask;
        double tissue = 0.0, background = 0.0;
        for (auto t : targets) {
            const auto fake = translate(gen, sources[i].image, label_of(t), model);
            const auto hm = weighting::discriminator_heatmap(disc, fake, label_of(t), model, cfg.heatmap);
            double ts = 0, bs = 0;
            std::size_t tn = 0, bn = 0;
            for (std::size_t y = 0; y < side; ++y)
                for (std::size_t x = 0; x < side; ++x) {
                    const double v = hm.at(y, x, side, side);
                    if (mask.at(y, x) != 0.0f) {
                        ts += v;
                        ++tn;
                    } else {
                        bs += v;
                        ++bn;
                    }
                }
            if (tn == 0 || bn == 0) throw ContractError("heatmap separation needs tissue and background pixels");
            tissue += ts / static_cast<double>(tn);
            background += bs / static_cast<double>(bn);
        }
        tissue /= static_cast<double>(targets.size());
        background /= static_cast<double>(targets.size());
        stats.tissue_mean.push_back(tissue);
        stats.background_mean.push_back(background);
        if (tissue > background) ++separated;
    }
    stats.separated_fraction = n == 0 ? 0.0 : static_cast<double>(separated) / static_cast<double>(n);
    return stats;
}

}  // namespace stnhcl::train
