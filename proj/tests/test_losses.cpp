#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "stnhcl/losses.hpp"

using namespace stnhcl;
using namespace stnhcl::numeric;
using oracle::Mat;

namespace {

double value(Var<double> v) { return v.value().item(); }

Var<double> c(Graph<double>& g, const Mat& m) { return g.constant(oracle::to_tensor(m)); }

struct Hgnn {
    oracle::HgnnWeights z, v;
    ParamStore<double> store;
};

Hgnn hgnn_weights(std::size_t layer, std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64& rng) {
    Hgnn h;
    h.z = {oracle::random_mat(in, hidden, rng), oracle::random_mat(hidden, out, rng)};
    h.v = {oracle::random_mat(in, hidden, rng), oracle::random_mat(hidden, out, rng)};
    using hypergraph::Branch;
    h.store[hypergraph::hgnn_param(layer, Branch::input, "theta1")] = oracle::to_tensor(h.z.t1);
    h.store[hypergraph::hgnn_param(layer, Branch::input, "theta2")] = oracle::to_tensor(h.z.t2);
    h.store[hypergraph::hgnn_param(layer, Branch::output, "theta1")] = oracle::to_tensor(h.v.t1);
    h.store[hypergraph::hgnn_param(layer, Branch::output, "theta2")] = oracle::to_tensor(h.v.t2);
    return h;
}

losses::HypergraphConfig hg_config(std::size_t edges) {
    losses::HypergraphConfig cfg;
    cfg.hyperedges = edges;
    return cfg;
}

oracle::HypergraphSettings oracle_settings(std::size_t edges) {
    oracle::HypergraphSettings s;
    s.edges = edges;
    return s;
}

// Two tight, far apart groups: clustering recovers them from any start.
Mat two_groups(std::size_t k, std::size_t d, std::mt19937_64& rng) {
    auto m = oracle::random_mat(k, d, rng, -0.01, 0.01);
    for (std::size_t i = 0; i < k; ++i) m[i][0] += (i % 2 == 0) ? 3.0 : -3.0;
    return m;
}

TEST(InfoNce, ClosedForms) {
    Graph<double> g;
    EXPECT_EQ(value(losses::info_nce(c(g, {{1.0, 0.0}}), c(g, {{0.6, 0.8}}), 0.07)), 0.0);

    Mat e{{1, 0}, {0, 1}};
    EXPECT_NEAR(value(losses::info_nce(c(g, e), c(g, e), 0.07)), std::log(1 + std::exp(-1 / 0.07)), 1e-15);

    EXPECT_THROW(losses::info_nce(g.constant(Tensor<double>({0, 4})), g.constant(Tensor<double>({0, 4})), 0.07),
                 ContractError);
    EXPECT_THROW(losses::info_nce(c(g, e), c(g, {{1, 0}}), 0.07), DimensionError);
}

TEST(InfoNce, MatchesScalarLoop) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        auto z = oracle::unit_rows(4, 8, rng), v = oracle::unit_rows(4, 8, rng);
        Graph<double> g;
        EXPECT_NEAR(value(losses::info_nce(c(g, z), c(g, v), 0.07)), oracle::info_nce(z, v, 0.07), 1e-10);
    }
}

TEST(WeightedNce, OnesReduceToInfoNce) {
    std::mt19937_64 rng(2);
    auto z = oracle::unit_rows(5, 6, rng), v = oracle::unit_rows(5, 6, rng);
    Graph<double> g;
    auto plain = value(losses::info_nce(c(g, z), c(g, v), 0.07));
    EXPECT_EQ(value(losses::weighted_nce(c(g, z), c(g, v), g.constant(Tensor<double>::ones({5, 5})), 0.07)), plain);
    auto flat = weighting::normal_weights(losses::similarity(c(g, z), c(g, v)), 0.7, 1e4);
    EXPECT_LT(std::abs(value(losses::weighted_nce(c(g, z), c(g, v), flat, 0.07)) - plain), 1e-6);
}

TEST(WeightedNce, MatchesScalarLoopAndIgnoresDiagonal) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto z = oracle::unit_rows(3, 5, rng), v = oracle::unit_rows(3, 5, rng);
        auto w = oracle::random_mat(3, 3, rng, 0.0, 3.0);
        Graph<double> g;
        const double lib = value(losses::weighted_nce(c(g, z), c(g, v), c(g, w), 0.1));
        EXPECT_NEAR(lib, oracle::weighted_nce(z, v, w, 0.1), 1e-10);
        for (int i = 0; i < 3; ++i) w[i][i] = 100.0;
        EXPECT_NEAR(value(losses::weighted_nce(c(g, z), c(g, v), c(g, w), 0.1)), lib, 1e-12);
    }
    Graph<double> g;
    auto z = oracle::unit_rows(2, 3, rng);
    EXPECT_THROW(losses::weighted_nce(c(g, z), c(g, z), c(g, {{1, -0.5}, {1, 1}}), 0.1), ContractError);
    EXPECT_THROW(losses::weighted_nce(c(g, z), c(g, z), c(g, {{1, NAN}, {1, 1}}), 0.1), ContractError);
    EXPECT_THROW(losses::weighted_nce(c(g, z), c(g, z), c(g, {{1, 1, 1}}), 0.1), DimensionError);
}

TEST(MonceLoss, UniformSimsAndSingleAnchor) {
    Graph<double> g;
    // Every z_i.v_j equal: softmax weights are all 1/K.
    Mat z{{1, 0}, {1, 0}, {1, 0}}, v = z;
    const double k = 3;
    Mat w(3, std::vector<double>(3, 1.0 / k));
    EXPECT_NEAR(value(losses::monce_loss(c(g, z), c(g, v), 0.07, weighting::MonceMode::hard)),
                oracle::weighted_nce(z, v, w, 0.07), 1e-12);
    EXPECT_EQ(value(losses::monce_loss(c(g, {{1, 0}}), c(g, {{0, 1}}), 0.07, weighting::MonceMode::easy)), 0.0);
}

TEST(MonceLoss, MatchesScalarLoop) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        auto z = oracle::unit_rows(5, 4, rng), v = oracle::unit_rows(5, 4, rng);
        for (bool hard : {true, false}) {
            Graph<double> g;
            auto w = oracle::monce_weights(oracle::sims(z, v), 0.07, hard);
            auto mode = hard ? weighting::MonceMode::hard : weighting::MonceMode::easy;
            EXPECT_NEAR(value(losses::monce_loss(c(g, z), c(g, v), 0.07, mode)), oracle::weighted_nce(z, v, w, 0.07),
                        1e-10);
        }
    }
}

TEST(MonceLoss, HardModeWeighsTheClosestNegativeMost) {
    // Anchor 0 has one near-duplicate negative and one far negative; with the
    // same total negative mass, concentrating it on the near one costs more.
    const double a = 0.3;
    Mat z{{1, 0}, {std::cos(a), std::sin(a)}, {-1, 0}}, v = z;
    Graph<double> g;
    auto s = oracle::sims(z, v);
    auto hard = oracle::monce_weights(s, 0.5, true);
    Mat uniform(3, std::vector<double>(3));
    for (std::size_t i = 0; i < 3; ++i) {
        double off = 0;
        for (std::size_t j = 0; j < 3; ++j)
            if (j != i) off += hard[i][j];
        for (std::size_t j = 0; j < 3; ++j) uniform[i][j] = off / 2.0;
    }
    const double weighted = value(losses::monce_loss(c(g, z), c(g, v), 0.5, weighting::MonceMode::hard));
    EXPECT_GT(weighted, oracle::weighted_nce(z, v, uniform, 0.5));
}

TEST(PatchNce, SumsLayers) {
    std::mt19937_64 rng(5);
    Graph<double> g;
    auto z0 = oracle::unit_rows(4, 6, rng), v0 = oracle::unit_rows(4, 6, rng);
    auto z1 = oracle::unit_rows(4, 6, rng), v1 = oracle::unit_rows(4, 6, rng);
    using Set = patch::EmbeddingSet<double>;
    std::vector<Set> one_z{{c(g, z0), 0}}, one_v{{c(g, v0), 0}};
    EXPECT_EQ(value(losses::patchnce_loss(one_z, one_v, 0.07)), value(losses::info_nce(c(g, z0), c(g, v0), 0.07)));
    std::vector<Set> twice_z{{c(g, z0), 0}, {c(g, z0), 1}}, twice_v{{c(g, v0), 0}, {c(g, v0), 1}};
    EXPECT_NEAR(value(losses::patchnce_loss(twice_z, twice_v, 0.07)), 2 * oracle::info_nce(z0, v0, 0.07), 1e-12);
    std::vector<Set> zs{{c(g, z0), 0}, {c(g, z1), 1}}, vs{{c(g, v0), 0}, {c(g, v1), 1}};
    EXPECT_NEAR(value(losses::patchnce_loss(zs, vs, 0.07)),
                oracle::info_nce(z0, v0, 0.07) + oracle::info_nce(z1, v1, 0.07), 1e-10);
    EXPECT_THROW(losses::patchnce_loss(zs, one_v, 0.07), ContractError);
}

TEST(SthclLoss, MatchesFullScalarPipeline) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        auto h = hgnn_weights(0, 5, 6, 4, rng);
        auto x = oracle::random_mat(6, 5, rng), y = oracle::random_mat(6, 5, rng);
        std::mt19937_64 r1(trial), r2(trial);
        Graph<double> g;
        Binder<double> params(g, h.store, false);
        const double lib = value(losses::sthcl_loss(c(g, x), c(g, y), params, 0, hg_config(3), 0.07, r1));
        auto [z, v] = oracle::hypergraph_embed(x, y, h.z, h.v, oracle_settings(3), r2);
        EXPECT_NEAR(lib, oracle::info_nce(z, v, 0.07), 1e-10);
    }
}

TEST(SthclLoss, SingleHyperedgeGivesLogK) {
    std::mt19937_64 rng(7);
    auto h = hgnn_weights(0, 3, 4, 4, rng);
    for (double tau : {0.05, 0.5, 3.0}) {
        Graph<double> g;
        Binder<double> params(g, h.store, false);
        auto x = oracle::random_mat(4, 3, rng), y = oracle::random_mat(4, 3, rng);
        EXPECT_NEAR(value(losses::sthcl_loss(c(g, x), c(g, y), params, 0, hg_config(1), tau, rng)), std::log(4.0),
                    1e-12);
    }
}

TEST(SthclLoss, InvariantToConsistentPatchReordering) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        auto h = hgnn_weights(0, 4, 5, 3, rng);
        auto x = two_groups(6, 4, rng), y = two_groups(6, 4, rng);
        std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
        Mat px, py;
        for (auto i : perm) {
            px.push_back(x[i]);
            py.push_back(y[i]);
        }
        Graph<double> g;
        Binder<double> params(g, h.store, false);
        auto cfg = hg_config(2);
        const double a = value(losses::sthcl_loss(c(g, x), c(g, y), params, 0, cfg, 0.07, rng));
        const double b = value(losses::sthcl_loss(c(g, px), c(g, py), params, 0, cfg, 0.07, rng));
        EXPECT_NEAR(a, b, 1e-10);
    }
}

TEST(SthclLoss, SelfPairBeatsRandomPartner) {
    std::mt19937_64 rng(9);
    auto h = hgnn_weights(0, 6, 8, 8, rng);
    auto cfg = hg_config(3);
    cfg.share_topology = true;
    cfg.share_params = true;
    for (int trial = 0; trial < 100; ++trial) {
        auto x = oracle::random_mat(6, 6, rng), y = oracle::random_mat(6, 6, rng);
        Graph<double> g;
        Binder<double> params(g, h.store, false);
        auto emb = losses::hypergraph_embed(c(g, x), c(g, x), params, 0, cfg, rng);
        EXPECT_EQ(emb.z.value(), emb.v.value());
        std::mt19937_64 r1(trial), r2(trial);
        const double self = value(losses::sthcl_loss(c(g, x), c(g, x), params, 0, cfg, 0.07, r1));
        const double other = value(losses::sthcl_loss(c(g, x), c(g, y), params, 0, cfg, 0.07, r2));
        EXPECT_LT(self, other);
    }
}

TEST(StnhclLoss, MatchesFullScalarPipeline) {
    std::mt19937_64 rng(10);
    weighting::WeightConfig w;
    for (int trial = 0; trial < 30; ++trial) {
        auto h = hgnn_weights(1, 5, 6, 4, rng);
        auto a = oracle::random_mat(4, 5, rng), b = oracle::random_mat(4, 5, rng);
        auto cc = oracle::random_mat(4, 5, rng), d = oracle::random_mat(4, 5, rng);
        std::mt19937_64 r1(trial), r2(trial);
        Graph<double> g;
        Binder<double> params(g, h.store, false);
        const double lib = value(losses::stnhcl_loss(c(g, a), c(g, b), c(g, cc), c(g, d), params, 1, hg_config(3), w, r1));
        const double ref = oracle::stnhcl(a, b, cc, d, h.z, h.v, oracle_settings(3), w.mu1, w.sigma1, w.mu2, w.sigma2,
                                          w.tau, r2);
        EXPECT_NEAR(lib, ref, 1e-8);
    }
}

TEST(StnhclLoss, EqualRegionsGiveTwiceOneTerm) {
    std::mt19937_64 rng(11);
    auto h = hgnn_weights(0, 4, 5, 4, rng);
    weighting::WeightConfig w;
    w.mu2 = w.mu1;
    w.sigma2 = w.sigma1;
    auto x = two_groups(6, 4, rng), y = two_groups(6, 4, rng);
    Graph<double> g;
    Binder<double> params(g, h.store, false);
    const double total = value(losses::stnhcl_loss(c(g, x), c(g, y), c(g, x), c(g, y), params, 0, hg_config(2), w, rng));
    auto emb = losses::hypergraph_embed(c(g, x), c(g, y), params, 0, hg_config(2), rng);
    auto wt = weighting::region_weights(losses::similarity(emb.z, emb.v), weighting::Region::tissue, w);
    EXPECT_NEAR(total, 2 * value(losses::weighted_nce(emb.z, emb.v, wt, w.tau)), 1e-12);
}

TEST(StnhclLoss, FlatSigmaConvergesToUnweightedTerms) {
    std::mt19937_64 rng(12);
    auto h = hgnn_weights(0, 5, 6, 4, rng);
    auto a = oracle::random_mat(6, 5, rng), b = oracle::random_mat(6, 5, rng);
    auto cc = oracle::random_mat(6, 5, rng), d = oracle::random_mat(6, 5, rng);
    Graph<double> g;
    Binder<double> params(g, h.store, false);
    std::mt19937_64 r0(1);
    const double unweighted = value(losses::sthcl_loss(c(g, a), c(g, b), params, 0, hg_config(3), 0.07, r0)) +
                              value(losses::sthcl_loss(c(g, cc), c(g, d), params, 0, hg_config(3), 0.07, r0));
    double previous = INFINITY;
    for (double sigma : {1.0, 10.0, 1e2, 1e4}) {
        weighting::WeightConfig w;
        w.sigma1 = w.sigma2 = sigma;
        std::mt19937_64 r(1);
        const double gap = std::abs(
            value(losses::stnhcl_loss(c(g, a), c(g, b), c(g, cc), c(g, d), params, 0, hg_config(3), w, r)) - unweighted);
        EXPECT_LE(gap, previous);
        previous = gap;
    }
    EXPECT_LT(previous, 1e-6);
}

TEST(ContrastiveLosses, NonNegative) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 1 + rng() % 6;
        auto z = oracle::unit_rows(k, 4, rng), v = oracle::unit_rows(k, 4, rng);
        Graph<double> g;
        EXPECT_GE(value(losses::info_nce(c(g, z), c(g, v), 0.07)), 0.0);
        EXPECT_GE(value(losses::monce_loss(c(g, z), c(g, v), 0.07, weighting::MonceMode::easy)), 0.0);
        if (k > 1) {
            EXPECT_GT(value(losses::info_nce(c(g, z), c(g, v), 0.07)), 0.0);
        }
    }
}

TEST(Lsgan, Corners) {
    Graph<double> g;
    auto ones = g.constant(Tensor<double>({2, 2}, 1.0)), zeros = g.constant(Tensor<double>({2, 2}, 0.0));
    auto half = g.constant(Tensor<double>({2, 2}, 0.5));
    auto opt = losses::lsgan_losses(ones, zeros);
    EXPECT_EQ(value(opt.d_loss), 0.0);
    EXPECT_EQ(value(opt.g_loss), 1.0);
    auto mid = losses::lsgan_losses(half, half);
    EXPECT_DOUBLE_EQ(value(mid.d_loss), 0.5);
    EXPECT_DOUBLE_EQ(value(mid.g_loss), 0.25);
    auto verbatim = losses::lsgan_losses(zeros, ones, losses::AdvMode::verbatim);
    EXPECT_EQ(value(verbatim.d_loss), 0.0);
    EXPECT_EQ(value(verbatim.g_loss), 0.0);
}

TEST(TotalLoss, GroupedArithmetic) {
    EXPECT_EQ(losses::combine_losses(0, 0, 0, 0, 10, 10).total, 0.0);
    EXPECT_EQ(losses::combine_losses(1, 0, 0, 0, 10, 10).total, 10.0);
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const double adv = u(rng), nce = u(rng), hg = u(rng), aux = u(rng), l1 = u(rng), l2 = u(rng);
        EXPECT_NEAR(losses::combine_losses(adv, nce, hg, aux, l1, l2).total, l1 * (adv + aux) + l2 * (hg + nce), 1e-12);
    }
    EXPECT_THROW(losses::combine_losses(0, 0, 0, 0, -1, 1), ConfigError);
}

TEST(TotalLoss, DisabledTermsContributeNothing) {
    Graph<double> g;
    losses::LossTerms<double> terms;
    auto empty = losses::total_generator_loss(g, terms, 10, 10);
    EXPECT_EQ(value(empty.total), 0.0);

    terms.adv = g.parameter("adv", Tensor<double>::scalar(0.5));
    terms.stnhcl = g.parameter("hg", Tensor<double>::scalar(2.0));
    auto t = losses::total_generator_loss(g, terms, 10, 3);
    EXPECT_DOUBLE_EQ(value(t.total), 11.0);
    EXPECT_DOUBLE_EQ(t.report.total, 11.0);
    EXPECT_EQ(t.report.patchnce, 0.0);
    auto grads = g.backward(t.total);
    EXPECT_DOUBLE_EQ(grads["adv"].item(), 10.0);
    EXPECT_DOUBLE_EQ(grads["hg"].item(), 3.0);
}

TEST(ContrastiveLosses, WeightedTermNeedsHeatmap) {
    models::ModelConfig mc;
    mc.image_size = 32;
    std::mt19937_64 rng(15);
    auto store = models::init_generator_params<double>(mc, rng);
    Graph<double> g;
    Binder<double> params(g, store, false);
    const std::size_t taps[] = {0};
    auto x = g.constant(Tensor<double>::uniform({3, 32, 32}, rng, 0, 1));
    auto stack = models::encoder_forward(params, x, taps, mc);
    losses::ContrastiveConfig cfg;
    cfg.num_patches = 8;
    const weighting::Heatmap<double>* no_heatmap = nullptr;
    EXPECT_THROW(losses::contrastive_losses(params, stack, stack, no_heatmap, cfg, rng), ContractError);
    cfg.use_stnhcl = false;
    cfg.use_sthcl = true;
    auto terms = losses::contrastive_losses(params, stack, stack, no_heatmap, cfg, rng);
    EXPECT_TRUE(terms.patchnce.valid());
    EXPECT_TRUE(terms.hypergraph.valid());
    ASSERT_EQ(terms.per_layer.size(), 1u);
    EXPECT_DOUBLE_EQ(terms.per_layer[0].patchnce, value(terms.patchnce));
}

}  // namespace
