// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance --work DIR [--only 1,2,...]
//
// Criteria 6-8 train real models on synthetic data inside DIR.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "stnhcl/gradcheck_suite.hpp"
#include "stnhcl/losses.hpp"
#include "stnhcl/trainer.hpp"

using namespace stnhcl;
using namespace stnhcl::numeric;
using oracle::Mat;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double value(Var<double> v) { return v.value().item(); }
Var<double> c(Graph<double>& g, const Mat& m) { return g.constant(oracle::to_tensor(m)); }

struct HgnnPair {
    oracle::HgnnWeights z, v;
    ParamStore<double> store;
};

HgnnPair random_hgnn(std::size_t layer, std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64& rng) {
    using hypergraph::Branch;
    HgnnPair h;
    h.z = {oracle::random_mat(in, hidden, rng), oracle::random_mat(hidden, out, rng)};
    h.v = {oracle::random_mat(in, hidden, rng), oracle::random_mat(hidden, out, rng)};
    h.store[hypergraph::hgnn_param(layer, Branch::input, "theta1")] = oracle::to_tensor(h.z.t1);
    h.store[hypergraph::hgnn_param(layer, Branch::input, "theta2")] = oracle::to_tensor(h.z.t2);
    h.store[hypergraph::hgnn_param(layer, Branch::output, "theta1")] = oracle::to_tensor(h.v.t1);
    h.store[hypergraph::hgnn_param(layer, Branch::output, "theta2")] = oracle::to_tensor(h.v.t2);
    return h;
}

// 1 ------------------------------------------------------------------------
Verdict gradient_suite() {
    auto result = gradcheck::run_suite(gradcheck::default_cases());
    std::size_t failed = 0;
    for (const auto& r : result.reports) failed += !r.passed;
    std::fputs(gradcheck::format_table(result).c_str(), stdout);
    return {result.passed && result.seconds < 300.0,
            std::to_string(result.reports.size()) + " checks, " + std::to_string(failed) + " failed, " +
                fmt("%.1f s", result.seconds)};
}

// 2 ------------------------------------------------------------------------
Verdict brute_force() {
    std::mt19937_64 rng(2024);
    double worst[5] = {0, 0, 0, 0, 0};
    const weighting::WeightConfig w;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng() % 5, d = 2 + rng() % 5;
        auto z = oracle::unit_rows(k, d, rng), v = oracle::unit_rows(k, d, rng);
        auto wm = oracle::random_mat(k, k, rng, 0.0, 2.0);
        Graph<double> g;
        worst[0] = std::max(worst[0], std::abs(value(losses::info_nce(c(g, z), c(g, v), w.tau)) -
                                               oracle::info_nce(z, v, w.tau)));
        worst[1] = std::max(worst[1], std::abs(value(losses::weighted_nce(c(g, z), c(g, v), c(g, wm), w.tau)) -
                                               oracle::weighted_nce(z, v, wm, w.tau)));
        for (bool hard : {true, false}) {
            auto mode = hard ? weighting::MonceMode::hard : weighting::MonceMode::easy;
            auto mw = oracle::monce_weights(oracle::sims(z, v), w.tau, hard);
            worst[2] = std::max(worst[2], std::abs(value(losses::monce_loss(c(g, z), c(g, v), w.tau, mode)) -
                                                   oracle::weighted_nce(z, v, mw, w.tau)));
        }

        auto h = random_hgnn(0, d, 5, 4, rng);
        Binder<double> params(g, h.store, false);
        losses::HypergraphConfig hg;
        hg.hyperedges = std::min<std::size_t>(3, k);
        oracle::HypergraphSettings s;
        s.edges = hg.hyperedges;
        auto x = oracle::random_mat(k, d, rng), y = oracle::random_mat(k, d, rng);
        const std::uint64_t seed = rng();
        {
            std::mt19937_64 r1(seed), r2(seed);
            const double lib = value(losses::sthcl_loss(c(g, x), c(g, y), params, 0, hg, w.tau, r1));
            auto [oz, ov] = oracle::hypergraph_embed(x, y, h.z, h.v, s, r2);
            worst[3] = std::max(worst[3], std::abs(lib - oracle::info_nce(oz, ov, w.tau)));
        }
        {
            auto x2 = oracle::random_mat(k, d, rng), y2 = oracle::random_mat(k, d, rng);
            std::mt19937_64 r1(seed), r2(seed);
            const double lib =
                value(losses::stnhcl_loss(c(g, x), c(g, y), c(g, x2), c(g, y2), params, 0, hg, w, r1));
            const double ref =
                oracle::stnhcl(x, y, x2, y2, h.z, h.v, s, w.mu1, w.sigma1, w.mu2, w.sigma2, w.tau, r2);
            worst[4] = std::max(worst[4], std::abs(lib - ref));
        }
    }
    const double max_err = *std::max_element(std::begin(worst), std::end(worst));
    return {max_err <= 1e-10, "max |lib - oracle|: info_nce " + fmt("%.1e", worst[0]) + ", weighted " +
                                  fmt("%.1e", worst[1]) + ", monce " + fmt("%.1e", worst[2]) + ", sthcl " +
                                  fmt("%.1e", worst[3]) + ", stnhcl " + fmt("%.1e", worst[4])};
}

// 3 ------------------------------------------------------------------------
Verdict weight_laws() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> mu(-1, 1), sigma(0.05, 5);
    double mean_err = 0, row_err = 0, flat_gap = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 2 + rng() % 15;
        auto s = Tensor<double>::uniform({k, k}, rng, -1, 1);
        Graph<double> g;
        auto nw = weighting::normal_weights(g.constant(s), mu(rng), sigma(rng)).value();
        auto mw = weighting::monce_weights(g.constant(s), 0.07,
                                           trial % 2 ? weighting::MonceMode::hard : weighting::MonceMode::easy)
                      .value();
        for (std::size_t i = 0; i < k; ++i) {
            double a = 0, b = 0;
            for (std::size_t j = 0; j < k; ++j) {
                a += nw.at(i, j);
                b += mw.at(i, j);
            }
            mean_err = std::max(mean_err, std::abs(a / static_cast<double>(k) - 1.0));
            row_err = std::max(row_err, std::abs(b - 1.0));
        }
    }
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 4 + rng() % 13, d = 3 + rng() % 6;
        auto h = random_hgnn(0, d, 8, 8, rng);
        Graph<double> g;
        Binder<double> params(g, h.store, false);
        losses::HypergraphConfig hg;
        auto emb = losses::hypergraph_embed(c(g, oracle::random_mat(k, d, rng)), c(g, oracle::random_mat(k, d, rng)),
                                            params, 0, hg, rng);
        auto wt = weighting::normal_weights(losses::similarity(emb.z, emb.v), 0.7, 1e4);
        flat_gap = std::max(flat_gap, std::abs(value(losses::weighted_nce(emb.z, emb.v, wt, 0.07)) -
                                               value(losses::info_nce(emb.z, emb.v, 0.07))));
    }
    return {mean_err <= 1e-12 && row_err <= 1e-6 && flat_gap < 1e-6,
            "normal row-mean err " + fmt("%.1e", mean_err) + ", monce row-sum err " + fmt("%.1e", row_err) +
                ", sigma=1e4 gap " + fmt("%.1e", flat_gap)};
}

// 4 ------------------------------------------------------------------------
hypergraph::Hypergraph random_hypergraph(std::size_t edges, std::size_t nodes, std::mt19937_64& rng) {
    hypergraph::Hypergraph hg(edges, nodes);
    std::bernoulli_distribution coin(0.35);
    std::uniform_int_distribution<std::size_t> pick(0, edges - 1);
    for (std::size_t k = 0; k < nodes; ++k) {
        hg.set(pick(rng), k);
        for (std::size_t e = 0; e < edges; ++e)
            if (coin(rng)) hg.set(e, k);
    }
    return hg;
}

Verdict hypergraph_laws() {
    std::mt19937_64 rng(4);
    double row_err = 0, perm_err = 0, bound_excess = 0;
    std::size_t isolated = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 2 + rng() % 30, m = 1 + rng() % std::min<std::size_t>(k, 6);
        auto x = Tensor<double>::uniform({k, 1 + rng() % 8}, rng, -1, 1);
        const double temp = std::exp(std::uniform_real_distribution<double>(std::log(1e-3), std::log(10.0))(rng));
        auto mm = hypergraph::soft_kmeans(x, m, temp, 1 + rng() % 10, rng);
        for (std::size_t i = 0; i < k; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < m; ++j) s += mm.m.at(i, j);
            row_err = std::max(row_err, std::abs(s - 1.0));
        }
        const double threshold = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
        auto hg = hypergraph::build_incidence(mm.m, threshold);
        for (std::size_t i = 0; i < k; ++i) isolated += hg.node_degree(i) == 0;
    }
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 3 + rng() % 10, cdim = 1 + rng() % 6;
        auto hg = random_hypergraph(1 + rng() % 4, k, rng);
        auto x = Tensor<double>::uniform({k, cdim}, rng, -1, 1);
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Tensor<double> px({k, cdim});
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t d = 0; d < cdim; ++d) px.at(i, d) = x.at(perm[i], d);
        Graph<double> g;
        hypergraph::HgnnParams<double> p{g.constant(Tensor<double>::uniform({cdim, 5}, rng, -1, 1)),
                                         g.constant(Tensor<double>::uniform({5, 4}, rng, -1, 1))};
        auto out = hypergraph::hgnn_conv(hg, g.constant(x), p).value();
        auto pout = hypergraph::hgnn_conv(hg.permute_nodes(perm), g.constant(px), p).value();
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t d = 0; d < 4; ++d) perm_err = std::max(perm_err, std::abs(pout.at(i, d) - out.at(perm[i], d)));
    }
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 2 + rng() % 10, cdim = 1 + rng() % 6;
        auto hg = random_hypergraph(1 + rng() % 5, k, rng);
        auto x = Tensor<double>::uniform({k, cdim}, rng, -5, 5);
        Graph<double> g;
        hypergraph::HgnnParams<double> p{g.constant(Tensor<double>::eye(cdim)), g.constant(Tensor<double>::eye(cdim)),
                                         hypergraph::Activation::identity};
        auto out = hypergraph::hgnn_conv(hg, g.constant(x), p).value();
        for (std::size_t d = 0; d < cdim; ++d) {
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t i = 0; i < k; ++i) {
                lo = std::min(lo, x.at(i, d));
                hi = std::max(hi, x.at(i, d));
            }
            for (std::size_t i = 0; i < k; ++i)
                bound_excess = std::max({bound_excess, lo - out.at(i, d), out.at(i, d) - hi});
        }
    }
    return {row_err <= 1e-6 && isolated == 0 && perm_err <= 1e-12 && bound_excess <= 1e-12,
            "membership row-sum err " + fmt("%.1e", row_err) + ", isolated nodes " + std::to_string(isolated) +
                ", permutation err " + fmt("%.1e", perm_err) + ", bound excess " + fmt("%.1e", bound_excess)};
}

// 5 ------------------------------------------------------------------------
std::vector<double> descend(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t k = 16, d = 8;
    auto h = random_hgnn(0, d, 16, 16, rng);
    const auto xt = oracle::to_tensor(oracle::random_mat(k, d, rng)), yt = oracle::to_tensor(oracle::random_mat(k, d, rng));
    const auto xb = oracle::to_tensor(oracle::random_mat(k, d, rng)), yb = oracle::to_tensor(oracle::random_mat(k, d, rng));
    losses::HypergraphConfig hg;
    weighting::WeightConfig w;
    w.detach = false;
    losses::FrozenStructure frozen;
    const std::uint64_t structure_seed = rng();

    auto evaluate = [&](const ParamStore<double>& store, ParamStore<double>* grads) {
        frozen.rewind();
        std::mt19937_64 r(structure_seed);
        Graph<double> g;
        Binder<double> params(g, store, grads != nullptr);
        auto loss = losses::stnhcl_loss(g.constant(xt), g.constant(yt), g.constant(xb), g.constant(yb), params, 0, hg,
                                        w, r, &frozen);
        const double l = value(loss);
        if (grads) {
            auto gr = g.backward(loss);
            for (const auto& [name, t] : store) (*grads)[name] = gr[name];
        }
        return l;
    };

    std::vector<double> trace;
    ParamStore<double> store = h.store;
    ParamStore<double> grads;
    double current = evaluate(store, &grads);
    trace.push_back(current);
    for (int step = 0; step < 50; ++step) {
        double lr = 1e-2;
        bool accepted = false;
        for (int halvings = 0; halvings < 60 && !accepted; ++halvings, lr /= 2) {
            ParamStore<double> trial = store;
            for (auto& [name, t] : trial)
                for (std::size_t i = 0; i < t.numel(); ++i) t[i] -= lr * grads[name][i];
            const double next = evaluate(trial, nullptr);
            if (next < current) {
                store = std::move(trial);
                accepted = true;
            }
        }
        if (!accepted) break;
        current = evaluate(store, &grads);
        trace.push_back(current);
    }
    return trace;
}

Verdict gradient_descent() {
    bool decreasing = true, reproducible = true;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
        auto a = descend(seed), b = descend(seed);
        reproducible = reproducible && a == b;
        decreasing = decreasing && a.size() == 51;
        for (std::size_t i = 1; i < a.size(); ++i) decreasing = decreasing && a[i] < a[i - 1];
        detail += "seed " + std::to_string(seed) + ": " + fmt("%.4f", a.front()) + " -> " + fmt("%.4f", a.back()) +
                  " in " + std::to_string(a.size() - 1) + " steps; ";
    }
    detail += reproducible ? "traces reproducible" : "traces differ between runs";
    return {decreasing && reproducible, detail};
}

// 6-8 ----------------------------------------------------------------------
struct Workspace {
    fs::path root;
    fs::path train_data() const { return root / "data_train"; }
    fs::path eval_data() const { return root / "data_eval"; }
};

struct TrainedRun {
    RunConfig cfg;
    ParamStore<float> params;
    train::EvalReport report;
    double seconds = 0;
    double mean_css() const {
        double s = 0;
        for (const auto& d : report.domains) s += d.css.mean;
        return s / static_cast<double>(report.domains.size());
    }
};

const std::vector<synth::Domain> kDomains{synth::Domain::he, synth::Domain::mas, synth::Domain::pas,
                                          synth::Domain::pasm};

void prepare_data(const Workspace& ws) {
    fs::remove_all(ws.train_data());
    fs::remove_all(ws.eval_data());
    synth::make_dataset(200, kDomains, 1, ws.train_data(), 64);
    synth::make_dataset(50, kDomains, 2, ws.eval_data(), 64);
}

TrainedRun run_training(const Workspace& ws, const std::string& name, std::uint64_t seed,
                        const std::function<void(RunConfig&)>& variant) {
    RunConfig cfg;
    cfg.data = ws.train_data().string();
    cfg.eval_data = ws.eval_data().string();
    cfg.seed = seed;
    cfg.css_probe_every = 0;
    cfg.checkpoint_every = 0;
    cfg.out = (ws.root / "runs" / (name + "_seed" + std::to_string(seed))).string();
    variant(cfg);
    fs::remove_all(cfg.out);
    const auto t0 = std::chrono::steady_clock::now();
    auto result = train::train(cfg);
    TrainedRun run{cfg, std::move(result.params), {}, seconds_since(t0)};
    run.report = train::evaluate(run.params, cfg);
    std::printf("  run %-22s %7.1f s  css", name.c_str(), run.seconds);
    for (const auto& d : run.report.domains) std::printf(" %s %.4f", synth::domain_name(d.domain).c_str(), d.css.mean);
    std::printf("  whiteness");
    for (const auto& d : run.report.domains) std::printf(" %.4f", d.whiteness);
    std::printf("\n");
    std::fflush(stdout);
    return run;
}

Verdict smoke(const TrainedRun& run) {
    bool ok = run.seconds < 30 * 60;
    std::string detail;
    for (const auto& d : run.report.domains) {
        ok = ok && d.css.mean >= 0.7 && d.whiteness >= 0.8;
        detail += synth::domain_name(d.domain) + " css " + fmt("%.3f", d.css.mean) + " white " +
                  fmt("%.3f", d.whiteness) + "; ";
    }
    return {ok, detail + fmt("%.0f s wall time for 2000 iterations", run.seconds)};
}

Verdict separation(const TrainedRun& run) {
    auto eval = synth::load_dataset(synth::read_manifest(run.cfg.eval_data));
    auto stats = train::heatmap_separation(run.params, run.cfg, eval);
    return {stats.separated_fraction >= 0.8, "separated fraction " + fmt("%.2f", stats.separated_fraction) + " over " +
                                                 std::to_string(stats.tissue_mean.size()) + " held-out samples"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string work = "acceptance_work";
    std::vector<int> only;
    app.add_option("--work", work, "scratch directory for data and training runs");
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::set<int> wanted(only.begin(), only.end());
    auto want = [&](int n) { return wanted.empty() || wanted.count(n) != 0; };
    int failures = 0;
    auto report = [&](int n, const std::string& title, const Verdict& v) {
        std::printf("%s criterion %d: %s (%s)\n", v.pass ? "PASS" : "FAIL", n, title.c_str(), v.detail.c_str());
        std::fflush(stdout);
        failures += !v.pass;
    };
    auto guarded = [&](int n, const std::string& title, const std::function<Verdict()>& f) {
        if (!want(n)) return;
        try {
            report(n, title, f());
        } catch (const std::exception& e) {
            report(n, title, {false, std::string("threw: ") + e.what()});
        }
    };

    guarded(1, "gradient checks pass within 5 minutes", gradient_suite);
    guarded(2, "losses match brute-force scalar implementations", brute_force);
    guarded(3, "weighting laws", weight_laws);
    guarded(4, "hypergraph laws", hypergraph_laws);
    guarded(5, "backtracking descent on hypergraph weights decreases the loss", gradient_descent);

    if (want(6) || want(7) || want(8)) {
        Workspace ws{fs::absolute(work)};
        std::optional<TrainedRun> full0;
        try {
            fs::create_directories(ws.root);
            prepare_data(ws);
            full0 = run_training(ws, "full", 0, [](RunConfig&) {});
        } catch (const std::exception& e) {
            std::printf("training failed: %s\n", e.what());
        }
        guarded(6, "smoke run quality and wall time", [&]() -> Verdict {
            if (!full0) return {false, "no trained model"};
            return smoke(*full0);
        });
        guarded(7, "discriminator heatmap separates tissue from background", [&]() -> Verdict {
            if (!full0) return {false, "no trained model"};
            return separation(*full0);
        });
        guarded(8, "ablation ordering adv <= adv+PatchNCE <= full", [&]() -> Verdict {
            if (!full0) return {false, "no trained model"};
            std::size_t ordered = 0;
            std::string detail;
            for (std::uint64_t seed : {0, 1, 2}) {
                auto a = run_training(ws, "adv", seed, [](RunConfig& c) {
                    c.use_patchnce = false;
                    c.use_stnhcl = false;
                });
                auto b = run_training(ws, "adv_patchnce", seed, [](RunConfig& c) { c.use_stnhcl = false; });
                const double cc = seed == 0 ? full0->mean_css() : run_training(ws, "full", seed, [](RunConfig&) {}).mean_css();
                const double ca = a.mean_css(), cb = b.mean_css();
                const bool ok = ca <= cb && cb <= cc;
                ordered += ok;
                detail += "seed " + std::to_string(seed) + ": " + fmt("%.4f", ca) + " / " + fmt("%.4f", cb) + " / " +
                          fmt("%.4f", cc) + (ok ? " ordered; " : " not ordered; ");
            }
            return {ordered >= 2, detail + std::to_string(ordered) + " of 3 seeds ordered"};
        });
    }
    return failures == 0 ? 0 : 1;
}
