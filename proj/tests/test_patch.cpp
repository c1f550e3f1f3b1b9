#include <gtest/gtest.h>

#include <set>

#include "stnhcl/patch_embedding.hpp"

using namespace stnhcl;
using namespace stnhcl::numeric;

namespace {

TEST(SamplePatchIds, DistinctInBoundsAndDeterministic) {
    std::mt19937_64 a(3), b(3);
    auto ids = patch::sample_patch_ids(1, 16, 16, 64, a);
    auto again = patch::sample_patch_ids(1, 16, 16, 64, b);
    ASSERT_EQ(ids.size(), 64u);
    std::set<std::size_t> seen;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        EXPECT_LT(ids.ids[k].row, 16u);
        EXPECT_LT(ids.ids[k].col, 16u);
        seen.insert(ids.linear(k));
        EXPECT_EQ(ids.ids[k], again.ids[k]);
    }
    EXPECT_EQ(seen.size(), 64u);
}

TEST(SamplePatchIds, ExhaustionCoversEveryCell) {
    std::mt19937_64 rng(4);
    auto ids = patch::sample_patch_ids(0, 3, 5, 15, rng);
    std::set<std::size_t> seen;
    bool shuffled = false;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        seen.insert(ids.linear(k));
        shuffled = shuffled || ids.linear(k) != k;
    }
    EXPECT_EQ(seen.size(), 15u);
    EXPECT_TRUE(shuffled);
    EXPECT_THROW(patch::sample_patch_ids(0, 3, 5, 16, rng), ConfigError);
}

TEST(GatherPatches, ConstantMapGivesIdenticalRows) {
    Graph<double> g;
    auto map = g.constant(Tensor<double>({4, 6, 6}, 0.25));
    std::mt19937_64 rng(5);
    auto p = patch::gather_patches(map, patch::sample_patch_ids(0, 6, 6, 10, rng)).value();
    for (double v : p.data()) EXPECT_EQ(v, 0.25);
}

TEST(GatherPatches, ImpulseAppearsInExactlyOneRow) {
    Tensor<double> m({2, 4, 4});
    m.at(1, 2, 3) = 5.0;
    Graph<double> g;
    auto ids = patch::PatchIdList{0, 4, 4, {{0, 0}, {2, 3}, {1, 1}}};
    auto p = patch::gather_patches(g.constant(m), ids).value();
    std::size_t nonzero_rows = 0;
    for (std::size_t k = 0; k < 3; ++k) nonzero_rows += (p.at(k, 0) != 0 || p.at(k, 1) != 0);
    EXPECT_EQ(nonzero_rows, 1u);
    EXPECT_EQ(p.at(1, 1), 5.0);
}

TEST(GatherPatches, GradientReachesOnlyGatheredCells) {
    Graph<double> g;
    auto map = g.parameter("map", Tensor<double>({2, 3, 3}, 1.0));
    auto ids = patch::PatchIdList{0, 3, 3, {{0, 1}, {2, 2}}};
    auto grads = g.backward(sum(patch::gather_patches(map, ids)));
    const auto& gm = grads["map"];
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < 3; ++y)
            for (std::size_t x = 0; x < 3; ++x) {
                const bool hit = (y == 0 && x == 1) || (y == 2 && x == 2);
                EXPECT_EQ(gm.at(c, y, x), hit ? 1.0 : 0.0);
            }
}

TEST(GatherPatches, Errors) {
    Graph<double> g;
    auto map = g.constant(Tensor<double>({2, 3, 3}));
    EXPECT_THROW(patch::gather_patches(map, patch::PatchIdList{0, 3, 3, {{3, 0}}}), IndexError);
    EXPECT_THROW(patch::gather_patches(map, patch::PatchIdList{0, 4, 3, {{0, 0}}}), DimensionError);
}

ParamStore<double> identity_head(std::size_t c) {
    return {{patch::head_param(0, "w1"), Tensor<double>::eye(c)},
            {patch::head_param(0, "b1"), Tensor<double>({c})},
            {patch::head_param(0, "w2"), Tensor<double>::eye(c)},
            {patch::head_param(0, "b2"), Tensor<double>({c})}};
}

TEST(Project, IdentityHeadKeepsUnitRows) {
    auto store = identity_head(3);
    Graph<double> g;
    Binder<double> params(g, store, false);
    auto x = Tensor<double>::from_rows({{0.6, 0.8, 0.0}, {0.0, 0.0, 1.0}});
    auto e = patch::project(g.constant(x), params, 0);
    EXPECT_LT(max_abs_diff(e.embeddings.value(), x), 1e-7);
    EXPECT_EQ(e.layer, 0u);
}

TEST(Project, EqualRowsInEqualRowsOut) {
    std::mt19937_64 rng(6);
    ParamStore<double> store{{patch::head_param(0, "w1"), Tensor<double>::uniform({4, 5}, rng, -1, 1)},
                             {patch::head_param(0, "b1"), Tensor<double>::uniform({5}, rng, -1, 1)},
                             {patch::head_param(0, "w2"), Tensor<double>::uniform({5, 3}, rng, -1, 1)},
                             {patch::head_param(0, "b2"), Tensor<double>::uniform({3}, rng, -1, 1)}};
    Graph<double> g;
    Binder<double> params(g, store, false);
    auto row = Tensor<double>::uniform({1, 4}, rng, -1, 1);
    auto x = broadcast_to(g.constant(row), {6, 4});
    auto e = patch::project(x, params, 0).embeddings.value();
    for (std::size_t k = 1; k < 6; ++k)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(e.at(k, j), e.at(0, j));

    auto r = patch::project(g.constant(Tensor<double>::uniform({20, 4}, rng, -1, 1)), params, 0).embeddings.value();
    for (std::size_t k = 0; k < 20; ++k) {
        double s = 0;
        for (std::size_t j = 0; j < 3; ++j) s += r.at(k, j) * r.at(k, j);
        EXPECT_NEAR(std::sqrt(s), 1.0, 1e-6);
    }
    EXPECT_THROW(patch::project(g.constant(Tensor<double>({2, 7})), params, 0), ConfigError);
}

TEST(ExtractStack, ShapesFollowTheExtentFormula) {
    models::ModelConfig cfg;
    cfg.image_size = 32;
    std::mt19937_64 rng(7);
    auto store = models::init_generator_params<double>(cfg, rng);
    Graph<double> g;
    Binder<double> params(g, store, false);
    auto image = g.constant(Tensor<double>::uniform({3, 32, 32}, rng, 0, 1));
    const std::size_t taps[] = {2, 0};
    auto stack = patch::extract_stack(params, image, taps, cfg);
    ASSERT_EQ(stack.size(), 2u);
    EXPECT_EQ(stack.layer_ids, (std::vector<std::size_t>{2, 0}));
    EXPECT_EQ(stack.maps[0].shape(), (Shape{64, 4, 4}));
    EXPECT_EQ(stack.maps[1].shape(), (Shape{16, 16, 16}));
    EXPECT_EQ(models::encoder_layer_shape(cfg, 1), (Shape{32, 8, 8}));

    auto again = patch::extract_stack(params, image, taps, cfg);
    EXPECT_EQ(again.maps[0].value(), stack.maps[0].value());

    const std::size_t bad[] = {3};
    EXPECT_THROW(patch::extract_stack(params, image, bad, cfg), ConfigError);
}

TEST(ExtractStack, SingleLayerEncoder) {
    models::ModelConfig cfg;
    cfg.image_size = 32;
    cfg.enc_channels = {8};
    cfg.taps = {0};
    std::mt19937_64 rng(8);
    auto store = models::init_generator_params<double>(cfg, rng);
    Graph<double> g;
    Binder<double> params(g, store, false);
    const std::size_t taps[] = {0};
    auto stack = patch::extract_stack(params, g.constant(Tensor<double>({3, 32, 32}, 0.5)), taps, cfg);
    ASSERT_EQ(stack.size(), 1u);
    EXPECT_EQ(stack.maps[0].shape(), (Shape{8, 16, 16}));
}

}  // namespace
