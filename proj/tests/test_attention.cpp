#include <gtest/gtest.h>

#include <cmath>

#include "chestnet/attention.hpp"
#include "chestnet/model.hpp"
#include "chestnet/ops.hpp"
#include "oracles.hpp"

using namespace chestnet;
using chestnet::testing::gradcheck;
using chestnet::testing::random_tensor;

namespace {

AttentionConfig small_attention(std::size_t map) {
    AttentionConfig c;
    c.pre_channels = {5, 4, 6};
    c.post_mid_channels = 7;
    c.map_size = map;
    return c;
}

struct Fixture {
    ParamStore<double> ps;
    Rng rng{21};
    AttentionBranch<double> branch;
    Fixture(std::size_t in, std::size_t classes, std::size_t map)
        : branch(small_attention(map), in, classes, ps, rng) {}
};

}  // namespace

TEST(Attention, PreConvsZeroWeightsGiveReluBias) {
    Fixture f(3, 2, 4);
    for (std::size_t i = 0; i < f.ps.size(); ++i) {
        if (f.ps.name(i).find("attention.pre") == 0) {
            f.ps.value(i).fill(0.0);
        }
    }
    f.ps.value(*f.ps.find("attention.pre3.bias")).storage() = {0.5, -1, 2, 0, 3, -0.1};
    Graph<double> g(&f.ps);
    auto a = f.branch.pre_convs(g, g.constant(random_tensor<double>(Shape{2, 3, 4, 4}, f.rng)));
    EXPECT_EQ(a.shape(), (Shape{2, 6, 4, 4}));
    const std::vector<double> expect{0.5, 0, 2, 0, 3, 0};
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t k = 0; k < 6; ++k) EXPECT_DOUBLE_EQ(a.value().at(n, k, 2, 1), expect[k]);
}

TEST(Attention, PreConvsRejectWrongMapSize) {
    Fixture f(3, 2, 4);
    Graph<double> g(&f.ps);
    EXPECT_THROW((void)f.branch.pre_convs(g, g.constant(Tensor<double>(Shape{1, 3, 5, 5}))), ShapeError);
}

TEST(Attention, AuxScoresBiasAndLinearity) {
    Fixture f(3, 2, 4);
    Graph<double> g(&f.ps);
    const auto bias = f.ps.value(f.branch.aux_bias_index());
    auto s0 = f.branch.aux_scores(g, g.constant(Tensor<double>(Shape{1, 6, 4, 4})));
    for (std::size_t c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(s0.value()[c], bias[c]);

    f.ps.value(f.branch.aux_bias_index()).fill(0.0);
    Graph<double> g2(&f.ps);
    auto x = random_tensor<double>(Shape{1, 6, 4, 4}, f.rng, 0, 1);
    auto x2 = x;
    for (auto& v : x2.storage()) v *= 2.0;
    auto s1 = f.branch.aux_scores(g2, g2.constant(x)).value();
    auto s2 = f.branch.aux_scores(g2, g2.constant(x2)).value();
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(s2[c], 2.0 * s1[c], 1e-14);
}

TEST(Attention, GradCamWeightsMatchClosedForm) {
    Fixture f(3, 4, 5);
    Graph<double> g(&f.ps);
    auto feats = g.leaf(random_tensor<double>(Shape{3, 6, 5, 5}, f.rng, 0, 1), false);
    auto scores = f.branch.aux_scores(g, feats);
    auto w = gradcam_weights(g, scores, feats);
    ASSERT_TRUE(w.reachable);
    const auto& W = f.ps.value(f.branch.aux_weight_index());
    for (std::size_t n = 0; n < 3; ++n)
        for (std::size_t c = 0; c < 4; ++c)
            for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(w.alpha[(n * 4 + c) * 6 + k], W[c * 6 + k] / 25.0, 1e-15);
}

TEST(Attention, GradCamWeightsInvariantToScoreBias) {
    Fixture f(3, 2, 4);
    auto x = random_tensor<double>(Shape{1, 6, 4, 4}, f.rng, 0, 1);
    Graph<double> g1(&f.ps);
    auto a = g1.constant(x);
    auto w1 = gradcam_weights(g1, f.branch.aux_scores(g1, a), a).alpha;
    for (auto& v : f.ps.value(f.branch.aux_bias_index()).storage()) v += 3.0;
    Graph<double> g2(&f.ps);
    auto b = g2.constant(x);
    auto w2 = gradcam_weights(g2, f.branch.aux_scores(g2, b), b).alpha;
    EXPECT_EQ(w1.storage(), w2.storage());
}

TEST(Attention, GradCamMapsMatchHandComputedCam) {
    Fixture f(3, 2, 4);
    Graph<double> g(&f.ps);
    auto x = random_tensor<double>(Shape{2, 6, 4, 4}, f.rng, 0, 1);
    auto feats = g.constant(x);
    auto maps = f.branch.gradcam(g, feats, f.branch.aux_scores(g, feats));
    const auto& W = f.ps.value(f.branch.aux_weight_index());
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = 0; j < 4; ++j) {
                    double acc = 0;
                    for (std::size_t k = 0; k < 6; ++k) acc += W[c * 6 + k] / 16.0 * x.at(n, k, i, j);
                    EXPECT_NEAR(maps.raw.value().at(n, c, i, j), std::max(acc, 0.0), 1e-14);
                }
    // Normalized maps sum to one and are strictly positive.
    const auto& a = maps.normalized.value();
    for (std::size_t s = 0; s < 4; ++s) {
        double sum = 0;
        for (std::size_t p = 0; p < 16; ++p) {
            EXPECT_GT(a[s * 16 + p], 0.0);
            sum += a[s * 16 + p];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(Attention, IdentityAndNegativeWeighting) {
    Graph<double> g;
    auto feat = g.constant(Tensor<double>(Shape{1, 1, 2, 2}, std::vector<double>{0, 1, 2, 3}));
    auto one = g.constant(Tensor<double>(Shape{1, 1, 1}, 1.0));
    auto neg = g.constant(Tensor<double>(Shape{1, 1, 1}, -0.5));
    EXPECT_EQ(ops::relu(ops::channel_mix(one, feat)).value().storage(), (std::vector<double>{0, 1, 2, 3}));
    EXPECT_EQ(ops::relu(ops::channel_mix(neg, feat)).value().storage(), (std::vector<double>{0, 0, 0, 0}));
}

TEST(Attention, UnreachableScoreGivesZeroMaps) {
    Fixture f(3, 2, 4);
    Graph<double> g(&f.ps);
    auto feats = g.constant(random_tensor<double>(Shape{1, 6, 4, 4}, f.rng, 0, 1));
    auto unrelated = g.constant(Tensor<double>(Shape{1, 2}, 1.0));
    GradCamWeights<double> w;
    auto maps = f.branch.gradcam(g, feats, unrelated, &w);
    EXPECT_FALSE(w.reachable);
    for (double v : maps.raw.value().storage()) EXPECT_DOUBLE_EQ(v, 0.0);
    for (double v : maps.normalized.value().storage()) EXPECT_DOUBLE_EQ(v, 1.0 / 16.0);
}

TEST(Attention, PostConvsZeroWeightsGiveHalf) {
    Fixture f(3, 2, 4);
    for (std::size_t i = 0; i < f.ps.size(); ++i) {
        if (f.ps.name(i).find("attention.post") == 0) f.ps.value(i).fill(0.0);
    }
    Graph<double> g(&f.ps);
    auto y = ops::sigmoid(f.branch.post_convs(g, g.constant(random_tensor<double>(Shape{3, 2, 4, 4}, f.rng, 0, 1))));
    EXPECT_EQ(y.shape(), (Shape{3, 2}));
    for (double v : y.value().storage()) EXPECT_DOUBLE_EQ(v, 0.5);
    EXPECT_THROW((void)f.branch.post_convs(g, g.constant(Tensor<double>(Shape{1, 2, 5, 5}))), ShapeError);
}

TEST(Attention, UniformMapsGiveNeutralOutputAtInit) {
    // Post-convs see maps relative to uniform, and biases start at zero.
    Fixture f(3, 2, 4);
    Graph<double> g(&f.ps);
    auto y = ops::sigmoid(f.branch.post_convs(g, g.constant(Tensor<double>(Shape{2, 2, 4, 4}, 1.0 / 16.0))));
    for (double v : y.value().storage()) EXPECT_NEAR(v, 0.5, 1e-12);
}

TEST(Attention, MapSizedKernelStartsSpatiallyConstant) {
    Fixture f(3, 2, 4);
    const auto& w = f.ps.value(*f.ps.find("attention.post3.weight"));
    for (std::size_t oi = 0; oi < w.numel() / 16; ++oi)
        for (std::size_t p = 1; p < 16; ++p) EXPECT_EQ(w[oi * 16 + p], w[oi * 16]);
}

TEST(Attention, BranchGradientsMatchFiniteDifferences) {
    Fixture f(3, 2, 4);
    auto shared = random_tensor<double>(Shape{2, 3, 4, 4}, f.rng, 0, 1);
    Tensor<double> y(Shape{2, 2}, std::vector<double>{1, 0, 0, 1});
    // Aux head parameters reach the loss only through the detached alpha.
    std::vector<bool> check(f.ps.size(), true);
    check[f.branch.aux_weight_index()] = false;
    check[f.branch.aux_bias_index()] = false;
    auto st = gradcheck(
        f.ps,
        [&](Graph<double>& g) {
            auto out = f.branch.forward(g, g.constant(shared), Var<double>());
            return ops::bce_loss(out.y_att, y);
        },
        check);
    EXPECT_GT(st.checked, 200u);
    EXPECT_LE(st.above_1e4 * 100, st.checked) << "worst " << st.worst << " kinks " << st.kinks;
    EXPECT_LT(st.worst, 1e-2);
}

TEST(Attention, DetachedAlphaGivesNoGradientToScoreSource) {
    Fixture f(3, 2, 4);
    Graph<double> g(&f.ps);
    auto out = f.branch.forward(g, g.constant(random_tensor<double>(Shape{2, 3, 4, 4}, f.rng, 0, 1)), Var<double>());
    auto loss = ops::bce_loss(out.y_att, Tensor<double>(Shape{2, 2}, 1.0));
    auto grads = g.param_grads(g.backward(loss));
    for (double v : grads[f.branch.aux_weight_index()].storage()) EXPECT_EQ(v, 0.0);
    for (double v : grads[f.branch.aux_bias_index()].storage()) EXPECT_EQ(v, 0.0);
}

TEST(Attention, BackboneTapSourceUsesClassificationLogits) {
    ModelConfig mc;
    mc.backbone.input_size = 16;
    mc.backbone.stem_channels = 4;
    mc.backbone.stage_blocks = {1, 1};
    mc.backbone.stage_channels = {4, 8};
    mc.backbone.num_classes = 3;
    mc.attention = small_attention(8);
    mc.attention.gradcam_source = GradCamSource::backbone_tap;
    ChestNet<double> model(mc, 3);
    Rng rng(4);
    Graph<double> g(&model.params());
    auto out = model.forward(g, random_tensor<double>(Shape{2, 1, 16, 16}, rng, 0, 1), ForwardMode::full);
    ASSERT_TRUE(out.attention.has_value());
    EXPECT_TRUE(out.attention->weights.reachable);
    EXPECT_EQ(out.attention->weights.alpha.shape(), (Shape{2, 3, 4}));
    EXPECT_EQ(out.y_att.shape(), (Shape{2, 3}));
}

TEST(Attention, SourceNamesRoundTrip) {
    EXPECT_EQ(parse_gradcam_source("aux_head"), GradCamSource::aux_head);
    EXPECT_EQ(gradcam_source_name(GradCamSource::backbone_tap), "backbone_tap");
    EXPECT_THROW(parse_gradcam_source("logits"), ConfigError);
}
