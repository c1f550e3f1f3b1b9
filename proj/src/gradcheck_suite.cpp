#include "stnhcl/gradcheck_suite.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <type_traits>

#include "stnhcl/hypergraph.hpp"
#include "stnhcl/losses.hpp"
#include "stnhcl/models.hpp"
#include "stnhcl/patch_embedding.hpp"
#include "stnhcl/weighting.hpp"

namespace stnhcl::gradcheck {

using numeric::GradCheckOptions;
using numeric::GradCheckReport;
using numeric::Shape;
using numeric::Tensor;
using numeric::Var;

namespace {

template <class G>
struct graph_scalar;
template <class T>
struct graph_scalar<numeric::Graph<T>> {
    using type = T;
};
template <class G>
using scalar_t = typename graph_scalar<std::remove_cvref_t<G>>::type;

Tensor<double> rnd(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    return Tensor<double>::uniform(std::move(shape), rng, lo, hi);
}

// Values with |x| in [0.2, 1], so kinked activations stay away from the kink.
Tensor<double> off_kink(Shape shape, std::uint64_t seed) {
    auto t = rnd(std::move(shape), seed, 0.2, 1.0);
    std::mt19937_64 rng(seed ^ 0x5bd1e995u);
    for (auto& v : t.data())
        if (rng() & 1u) v = -v;
    return t;
}

// Contracts y with a fixed random tensor so that every output coordinate
// contributes to the checked scalar.
template <class T>
Var<T> probe(Var<T> y) {
    auto r = rnd(y.shape(), 977 + y.value().numel()).template cast<T>();
    return numeric::sum(numeric::mul(y, y.graph().constant(std::move(r))));
}

GradCheckOptions options(const SuiteOptions& o, std::size_t max_coords = 0) {
    GradCheckOptions g;
    g.eps = o.eps;
    g.tolerance = o.tolerance;
    g.max_coords_per_input = max_coords;
    return g;
}

template <class Builder>
Case simple(std::string name, std::vector<Tensor<double>> inputs, Builder build) {
    return {name, [name, inputs, build](const SuiteOptions& o) {
                return numeric::check_gradients(name, inputs, build, options(o));
            }};
}

template <class T>
const ParamStore<T>& pick_store(const ParamStore<float>& f, const ParamStore<double>& d) {
    if constexpr (std::is_same_v<T, double>)
        return d;
    else
        return f;
}

ParamStore<float> to_float(const ParamStore<double>& p) {
    ParamStore<float> out;
    for (const auto& [k, v] : p) out.emplace(k, v.cast<float>());
    return out;
}

void add_op_cases(std::vector<Case>& cases) {
    using numeric::add;
    cases.push_back(simple("add (broadcast)", {rnd({3, 4}, 1), rnd({1, 4}, 2)},
                           [](auto&, const auto& v) { return probe(numeric::add(v[0], v[1])); }));
    cases.push_back(simple("sub (broadcast)", {rnd({3, 4}, 3), rnd({3, 1}, 4)},
                           [](auto&, const auto& v) { return probe(numeric::sub(v[0], v[1])); }));
    cases.push_back(simple("mul (broadcast)", {rnd({2, 3, 4}, 5), rnd({4}, 6)},
                           [](auto&, const auto& v) { return probe(numeric::mul(v[0], v[1])); }));
    cases.push_back(simple("div", {rnd({3, 4}, 7), rnd({3, 4}, 8, 0.5, 2.0)},
                           [](auto&, const auto& v) { return probe(numeric::div(v[0], v[1])); }));
    cases.push_back(simple("neg", {rnd({5}, 9)}, [](auto&, const auto& v) { return probe(numeric::neg(v[0])); }));
    cases.push_back(
        simple("scale", {rnd({5}, 10)}, [](auto&, const auto& v) { return probe(numeric::scale(v[0], -2.5)); }));
    cases.push_back(simple("add_scalar", {rnd({5}, 11)},
                           [](auto&, const auto& v) { return probe(numeric::add_scalar(v[0], 0.75)); }));
    cases.push_back(simple("exp", {rnd({3, 3}, 12)}, [](auto&, const auto& v) { return probe(numeric::exp(v[0])); }));
    cases.push_back(
        simple("log", {rnd({3, 3}, 13, 0.5, 2.0)}, [](auto&, const auto& v) { return probe(numeric::log(v[0])); }));
    cases.push_back(
        simple("relu", {off_kink({4, 4}, 14)}, [](auto&, const auto& v) { return probe(numeric::relu(v[0])); }));
    cases.push_back(simple("leaky_relu", {off_kink({4, 4}, 15)},
                           [](auto&, const auto& v) { return probe(numeric::leaky_relu(v[0], 0.2)); }));
    cases.push_back(
        simple("sigmoid", {rnd({4, 4}, 16, -3, 3)}, [](auto&, const auto& v) { return probe(numeric::sigmoid(v[0])); }));
    cases.push_back(simple("broadcast_to", {rnd({1, 4}, 17)},
                           [](auto&, const auto& v) { return probe(numeric::broadcast_to(v[0], Shape{3, 4})); }));
    cases.push_back(simple("reshape", {rnd({3, 4}, 18)},
                           [](auto&, const auto& v) { return probe(numeric::reshape(v[0], Shape{2, 6})); }));
    cases.push_back(
        simple("transpose", {rnd({3, 5}, 19)}, [](auto&, const auto& v) { return probe(numeric::transpose(v[0])); }));
    cases.push_back(simple("matmul", {rnd({3, 4}, 20), rnd({4, 5}, 21)},
                           [](auto&, const auto& v) { return probe(numeric::matmul(v[0], v[1])); }));
    cases.push_back(simple("sum", {rnd({3, 4}, 22)}, [](auto&, const auto& v) {
        return numeric::mul(numeric::sum(v[0]), numeric::sum(v[0]));
    }));
    cases.push_back(simple("mean", {rnd({3, 4}, 23)}, [](auto&, const auto& v) {
        return numeric::exp(numeric::mean(v[0]));
    }));
    cases.push_back(simple("sum (axis, keepdim)", {rnd({3, 4, 2}, 24)},
                           [](auto&, const auto& v) { return probe(numeric::sum(v[0], 1, true)); }));
    cases.push_back(simple("mean (axis)", {rnd({3, 4}, 25)},
                           [](auto&, const auto& v) { return probe(numeric::mean(v[0], 0)); }));
    cases.push_back(simple("gather_rows (repeated rows)", {rnd({4, 3}, 26)}, [](auto&, const auto& v) {
        const std::size_t rows[] = {2, 0, 2, 3};
        return probe(numeric::gather_rows(v[0], rows));
    }));
    cases.push_back(simple("softmax (last axis)", {rnd({3, 5}, 27, -2, 2)},
                           [](auto&, const auto& v) { return probe(numeric::softmax(v[0], 1)); }));
    cases.push_back(simple("softmax (first axis)", {rnd({3, 5}, 28, -2, 2)},
                           [](auto&, const auto& v) { return probe(numeric::softmax(v[0], 0)); }));
    cases.push_back(simple("l2_normalize", {rnd({4, 6}, 29)},
                           [](auto&, const auto& v) { return probe(numeric::l2_normalize(v[0])); }));
    cases.push_back(simple("conv2d (stride 1, bias)", {rnd({2, 6, 6}, 30), rnd({3, 2, 3, 3}, 31), rnd({3}, 32)},
                           [](auto&, const auto& v) { return probe(numeric::conv2d(v[0], v[1], v[2], 1, 1)); }));
    cases.push_back(simple("conv2d (stride 2, no bias)", {rnd({2, 7, 7}, 33), rnd({4, 2, 3, 3}, 34)},
                           [](auto&, const auto& v) {
                               using T = scalar_t<decltype(v[0].graph())>;
                               return probe(numeric::conv2d(v[0], v[1], Var<T>{}, 2, 1));
                           }));
    cases.push_back(simple("upsample_nearest", {rnd({2, 3, 3}, 35)},
                           [](auto&, const auto& v) { return probe(numeric::upsample_nearest(v[0], 2)); }));
    cases.push_back(simple("mse (tensor target)", {rnd({3, 4}, 36)}, [](auto&, const auto& v) {
        using T = scalar_t<decltype(v[0].graph())>;
        return numeric::mse(v[0], rnd({3, 4}, 37).template cast<T>());
    }));
    cases.push_back(simple("mse (scalar target)", {rnd({3, 4}, 38)},
                           [](auto&, const auto& v) { return numeric::mse(v[0], 1.0); }));
    cases.push_back(simple("weighted_logsumexp", {rnd({4, 5}, 39, -2, 2), rnd({4, 5}, 40, 0.1, 2.0)},
                           [](auto&, const auto& v) { return probe(numeric::weighted_logsumexp(v[0], v[1])); }));
}

void add_loss_cases(std::vector<Case>& cases) {
    constexpr std::size_t K = 8, C = 16, H = 12, D = 10;
    auto unit = [](auto x) { return numeric::l2_normalize(x); };

    cases.push_back(simple("info_nce", {rnd({K, C}, 50), rnd({K, C}, 51)}, [unit](auto&, const auto& v) {
        return losses::info_nce(unit(v[0]), unit(v[1]), 0.07);
    }));
    cases.push_back(simple("weighted_nce", {rnd({K, C}, 52), rnd({K, C}, 53), rnd({K, K}, 54, 0.1, 2.0)},
                           [unit](auto&, const auto& v) {
                               return losses::weighted_nce(unit(v[0]), unit(v[1]), v[2], 0.07);
                           }));
    cases.push_back(simple("normal_weights (cosine)", {rnd({5, 5}, 55)}, [](auto&, const auto& v) {
        return probe(weighting::normal_weights(v[0], 0.7, 0.5));
    }));
    cases.push_back(simple("normal_weights (logit)", {rnd({5, 5}, 56, -0.2, 0.2)}, [](auto&, const auto& v) {
        return probe(weighting::normal_weights(v[0], 0.1, 5.0, weighting::SimilarityDomain::logit, 0.07));
    }));
    cases.push_back(simple("monce_weights (hard)", {rnd({5, 5}, 57)}, [](auto&, const auto& v) {
        return probe(weighting::monce_weights(v[0], 0.5, weighting::MonceMode::hard));
    }));
    cases.push_back(simple("monce_loss (easy, weights attached)", {rnd({K, C}, 58), rnd({K, C}, 59)},
                           [unit](auto&, const auto& v) {
                               return losses::monce_loss(unit(v[0]), unit(v[1]), 0.5, weighting::MonceMode::easy,
                                                         false);
                           }));
    cases.push_back(simple("projection head", {rnd({K, C}, 60), rnd({C, H}, 61), rnd({H}, 62), rnd({H, D}, 63),
                                               rnd({D}, 64)},
                           [](auto& g, const auto& v) {
                               using T = scalar_t<decltype(g)>;
                               ParamStore<T> empty;
                               Binder<T> b(g, empty, false);
                               const char* names[] = {"w1", "b1", "w2", "b2"};
                               for (std::size_t i = 0; i < 4; ++i) b.bind(patch::head_param(0, names[i]), v[i + 1]);
                               return probe(patch::project(v[0], b, 0).embeddings);
                           }));

    {
        const auto nodes = rnd({K, C}, 65);
        std::mt19937_64 rng(66);
        const auto hg = hypergraph::build_incidence(hypergraph::soft_kmeans(nodes, 3, 0.1, 10, rng).m, 0.3);
        for (auto act : {hypergraph::Activation::leaky_relu, hypergraph::Activation::identity}) {
            const std::string name = act == hypergraph::Activation::identity ? "hgnn_conv (identity)"
                                                                              : "hgnn_conv (leaky relu)";
            cases.push_back(simple(name, {nodes, rnd({C, H}, 67), rnd({H, D}, 68)}, [hg, act](auto&, const auto& v) {
                using T = scalar_t<decltype(v[0].graph())>;
                return probe(hypergraph::hgnn_conv(hg, v[0], hypergraph::HgnnParams<T>{v[1], v[2], act, 0.2}));
            }));
        }
    }

    auto bind_hgnn = [](auto& b, const auto& v, std::size_t first) {
        using hypergraph::Branch;
        b.bind(hypergraph::hgnn_param(0, Branch::input, "theta1"), v[first]);
        b.bind(hypergraph::hgnn_param(0, Branch::input, "theta2"), v[first + 1]);
        b.bind(hypergraph::hgnn_param(0, Branch::output, "theta1"), v[first + 2]);
        b.bind(hypergraph::hgnn_param(0, Branch::output, "theta2"), v[first + 3]);
    };
    const std::vector<Tensor<double>> thetas{rnd({C, H}, 70), rnd({H, D}, 71), rnd({C, H}, 72), rnd({H, D}, 73)};
    losses::HypergraphConfig hg_cfg;
    hg_cfg.hyperedges = 3;

    {
        std::vector<Tensor<double>> in{rnd({K, C}, 74), rnd({K, C}, 75)};
        in.insert(in.end(), thetas.begin(), thetas.end());
        cases.push_back({"sthcl_loss (K=8, M=3, c=16)", [in, hg_cfg, bind_hgnn](const SuiteOptions& o) {
                             losses::FrozenStructure frozen;
                             auto build = [&](auto& g, const auto& v) {
                                 using T = scalar_t<decltype(g)>;
                                 ParamStore<T> empty;
                                 Binder<T> b(g, empty, false);
                                 bind_hgnn(b, v, 2);
                                 std::mt19937_64 rng(76);
                                 frozen.rewind();
                                 return losses::sthcl_loss(v[0], v[1], b, 0, hg_cfg, 0.07, rng, &frozen);
                             };
                             return numeric::check_gradients("sthcl_loss (K=8, M=3, c=16)", in, build, options(o));
                         }});
    }
    {
        std::vector<Tensor<double>> in{rnd({K, C}, 77), rnd({K, C}, 78), rnd({K, C}, 79), rnd({K, C}, 80)};
        in.insert(in.end(), thetas.begin(), thetas.end());
        for (auto strategy : {weighting::Strategy::dual_normal, weighting::Strategy::monce_hard}) {
            const std::string name = strategy == weighting::Strategy::dual_normal
                                         ? "stnhcl_loss (dual normal, K=8, M=3, c=16)"
                                         : "stnhcl_loss (monce hard, K=8, M=3, c=16)";
            cases.push_back({name, [name, in, hg_cfg, bind_hgnn, strategy](const SuiteOptions& o) {
                                 losses::FrozenStructure frozen;
                                 weighting::WeightConfig w;
                                 w.strategy = strategy;
                                 w.detach = false;
                                 auto build = [&](auto& g, const auto& v) {
                                     using T = scalar_t<decltype(g)>;
                                     ParamStore<T> empty;
                                     Binder<T> b(g, empty, false);
                                     bind_hgnn(b, v, 4);
                                     std::mt19937_64 rng(81);
                                     frozen.rewind();
                                     return losses::stnhcl_loss(v[0], v[1], v[2], v[3], b, 0, hg_cfg, w, rng,
                                                                &frozen);
                                 };
                                 return numeric::check_gradients(name, in, build, options(o));
                             }});
        }
    }

    for (auto mode : {losses::AdvMode::standard, losses::AdvMode::verbatim}) {
        const std::string tag = mode == losses::AdvMode::standard ? "standard" : "verbatim";
        cases.push_back(simple("lsgan d_loss (" + tag + ")", {rnd({4, 4}, 82), rnd({4, 4}, 83)},
                               [mode](auto&, const auto& v) { return losses::lsgan_d_loss(v[0], v[1], mode); }));
        cases.push_back(simple("lsgan g_loss (" + tag + ")", {rnd({4, 4}, 84)},
                               [mode](auto&, const auto& v) { return losses::lsgan_g_loss(v[0], mode); }));
    }
    cases.push_back(simple("total_generator_loss", {rnd({}, 85), rnd({}, 86), rnd({}, 87), rnd({}, 88)},
                           [](auto& g, const auto& v) {
                               using T = scalar_t<decltype(g)>;
                               losses::LossTerms<T> t{v[0], v[1], v[2], v[3], {}};
                               auto total = losses::total_generator_loss(g, t, 10.0, 10.0).total;
                               return numeric::mul(total, total);
                           }));
}

models::ModelConfig small_model() {
    models::ModelConfig mc;
    mc.image_size = 16;
    mc.proj_dim = 16;
    mc.hgnn_hidden = 16;
    mc.hgnn_out = 16;
    return mc;
}

losses::ContrastiveConfig small_contrastive() {
    losses::ContrastiveConfig cc;
    cc.num_patches = 8;
    cc.candidate_factor = 2;
    cc.hypergraph.hyperedges = 3;
    cc.weights.detach = false;
    return cc;
}

void add_pipeline_cases(std::vector<Case>& cases) {
    // Encoder block 0 (c = 16 on a 16x16 image) feeding the weighted
    // hypergraph term, with a fixed heatmap.
    cases.push_back({"pipeline: encoder -> STNHCL", [](const SuiteOptions& o) {
                         auto mc = small_model();
                         mc.taps = {0};
                         std::mt19937_64 init(90);
                         auto store = models::init_generator_params<double>(mc, init);
                         std::vector<std::string> names;
                         std::vector<Tensor<double>> in{rnd({3, 16, 16}, 91, 0, 1), rnd({3, 16, 16}, 92, 0, 1)};
                         for (const auto& [k, v] : store)
                             if (k.rfind("enc.0.", 0) == 0 || k.rfind("hgnn.0.", 0) == 0) {
                                 names.push_back(k);
                                 // Non-zero biases so their gradients are exercised.
                                 in.push_back(k == "enc.0.bias" ? rnd(v.shape(), 93, -0.1, 0.1) : v);
                             }
                         const weighting::Heatmap<double> hm_d{rnd({4, 4}, 94)};
                         const weighting::Heatmap<float> hm_f{hm_d.values.cast<float>()};
                         auto cc = small_contrastive();
                         cc.use_patchnce = false;
                         cc.candidate_factor = 4;
                         losses::FrozenStructure frozen;
                         auto build = [&](auto& g, const auto& v) {
                             using T = scalar_t<decltype(g)>;
                             ParamStore<T> empty;
                             Binder<T> b(g, empty, false);
                             for (std::size_t i = 0; i < names.size(); ++i) b.bind(names[i], v[i + 2]);
                             const std::size_t taps[] = {0};
                             auto src = models::encoder_forward(b, v[0], taps, mc);
                             auto gen = models::encoder_forward(b, v[1], taps, mc);
                             const weighting::Heatmap<T>* hm;
                             if constexpr (std::is_same_v<T, double>)
                                 hm = &hm_d;
                             else
                                 hm = &hm_f;
                             std::mt19937_64 rng(95);
                             frozen.rewind();
                             return losses::contrastive_losses(b, src, gen, hm, cc, rng, &frozen).hypergraph;
                         };
                         return numeric::check_gradients("pipeline: encoder -> STNHCL", in, build, options(o));
                     }});

    // Source image and every generator parameter through generator, encoder,
    // discriminator heatmap, PatchNCE + STNHCL + adversarial term and the
    // lambda-weighted total, on a 16x16 image.
    cases.push_back({"pipeline: generator -> total loss", [](const SuiteOptions& o) {
                         const auto mc = small_model();
                         std::mt19937_64 init(100);
                         auto gen_store = models::init_generator_params<double>(mc, init);
                         const auto disc_d = models::init_discriminator_params<double>(mc, init);
                         const auto disc_f = to_float(disc_d);
                         std::vector<std::string> names;
                         std::vector<Tensor<double>> in{rnd({3, 16, 16}, 101, 0, 1)};
                         std::uint64_t seed = 102;
                         for (const auto& [k, v] : gen_store) {
                             names.push_back(k);
                             // Zero-initialised biases get small random values so their gradients are exercised.
                             const bool bias = k.ends_with("bias") || k.ends_with(".b1") || k.ends_with(".b2");
                             in.push_back(bias ? rnd(v.shape(), seed++, -0.1, 0.1) : v);
                         }
                         const auto cc = small_contrastive();
                         losses::FrozenStructure frozen;
                         auto build = [&](auto& g, const auto& v) {
                             using T = scalar_t<decltype(g)>;
                             ParamStore<T> empty;
                             Binder<T> b(g, empty, false);
                             for (std::size_t i = 0; i < names.size(); ++i) b.bind(names[i], v[i + 1]);
                             Binder<T> db(g, pick_store<T>(disc_f, disc_d), false);
                             const std::size_t label = 1;
                             auto out = models::generator_forward(b, v[0], label, mc.taps, mc);
                             auto d = models::discriminator_forward(db, out.image, label, mc);
                             auto hm = weighting::heatmap_from(d, weighting::HeatmapMode::penultimate);
                             auto generated = models::encoder_forward(b, out.image, mc.taps, mc);
                             std::mt19937_64 rng(103);
                             frozen.rewind();
                             auto ct = losses::contrastive_losses(b, out.stack, generated, &hm, cc, rng, &frozen);
                             losses::LossTerms<T> terms{losses::lsgan_g_loss(d.score_map), ct.patchnce,
                                                        ct.hypergraph, Var<T>{}, {}};
                             return losses::total_generator_loss(g, terms, 10.0, 10.0).total;
                         };
                         return numeric::check_gradients("pipeline: generator -> total loss", in, build,
                                                         options(o, o.generator_coords));
                     }});
}

}  // namespace

std::vector<Case> default_cases() {
    std::vector<Case> cases;
    add_op_cases(cases);
    add_loss_cases(cases);
    add_pipeline_cases(cases);
    return cases;
}

SuiteResult run_suite(const std::vector<Case>& cases, const SuiteOptions& opt, const std::string& filter) {
    const auto start = std::chrono::steady_clock::now();
    SuiteResult result;
    result.passed = true;
    for (const auto& c : cases) {
        if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
        GradCheckReport r;
        try {
            r = c.run(opt);
        } catch (const std::exception& e) {
            r.name = c.name + " [threw: " + e.what() + "]";
            r.max_rel_error = INFINITY;
            r.passed = false;
        }
        result.passed = result.passed && r.passed;
        result.reports.push_back(std::move(r));
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string format_table(const SuiteResult& result) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-48s %12s %8s %8s  %s\n", "check", "max rel err", "coords", "kinked",
                  "result");
    out += line;
    std::size_t failed = 0;
    for (const auto& r : result.reports) {
        std::snprintf(line, sizeof line, "%-48s %12.3e %8zu %8zu  %s\n", r.name.c_str(), r.max_rel_error,
                      r.coords_checked, r.coords_skipped, r.passed ? "PASS" : "FAIL");
        out += line;
        failed += r.passed ? 0 : 1;
    }
    std::snprintf(line, sizeof line, "%zu checks, %zu failed, %.1f s\n", result.reports.size(), failed,
                  result.seconds);
    out += line;
    return out;
}

}  // namespace stnhcl::gradcheck
