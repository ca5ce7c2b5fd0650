#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "chestnet/training.hpp"

using namespace chestnet;

namespace {

ModelConfig tiny_model() {
    ModelConfig mc;
    mc.backbone.input_size = 32;
    mc.backbone.stem_channels = 4;
    mc.backbone.stage_blocks = {1, 1};
    mc.backbone.stage_channels = {8, 8};
    mc.backbone.num_classes = 2;
    mc.attention.pre_channels = {8, 8, 8};
    mc.attention.post_mid_channels = 8;
    mc.attention.map_size = 16;
    return mc;
}

Dataset tiny_dataset(std::size_t n, std::uint64_t seed) {
    SynthConfig sc;
    sc.num_patients = n;
    sc.images_per_patient = 1;
    sc.image_size = 32;
    sc.regional_placement = false;
    sc.num_classes = 2;
    sc.seed = seed;
    return generate_synthetic(sc);
}

}  // namespace

TEST(Schedule, StepDecayAtFractions) {
    TrainConfig c;
    c.learning_rate = 0.1;
    c.max_iterations = 100;
    EXPECT_DOUBLE_EQ(lr_at(0, c), 0.1);
    EXPECT_DOUBLE_EQ(lr_at(49, c), 0.1);
    EXPECT_NEAR(lr_at(50, c), 0.01, 1e-15);
    EXPECT_NEAR(lr_at(74, c), 0.01, 1e-15);
    EXPECT_NEAR(lr_at(75, c), 0.001, 1e-15);
}

TEST(Schedule, EpochBatchesArePermutations) {
    auto batches = shuffle_batches(10, 3, 0, 4);
    ASSERT_EQ(batches.size(), 3u);
    EXPECT_EQ(batches[2].size(), 2u);
    std::set<std::size_t> seen;
    for (const auto& b : batches) seen.insert(b.begin(), b.end());
    EXPECT_EQ(seen.size(), 10u);
    EXPECT_EQ(shuffle_batches(10, 3, 0, 4), batches);
    EXPECT_NE(shuffle_batches(10, 3, 1, 4), batches);
    EXPECT_EQ(batch_for_iteration(10, 3, 4, 4), shuffle_batches(10, 3, 1, 4)[1]);
}

TEST(Loss, ScalarBceMatchesFormula) {
    LabelVector y{{1, 0, 1}, LabelRole::ground_truth};
    LabelVector p{{0.8, 0.1, 1.0}, LabelRole::fused};
    const double expected = -(std::log(0.8) + std::log(0.9) + std::log(1.0 - 1e-7));
    EXPECT_NEAR(bce_loss(y, p), expected, 1e-12);
    EXPECT_THROW((void)bce_loss(y, LabelVector{{0.5}, LabelRole::fused}), ShapeError);
}

TEST(Loss, FuseAverages) {
    auto f = fuse(LabelVector{{0.2, 1.0}, LabelRole::y_cls}, LabelVector{{0.4, 0.0}, LabelRole::y_att});
    EXPECT_EQ(f.role, LabelRole::fused);
    EXPECT_DOUBLE_EQ(f.values[0], 0.3);
    EXPECT_DOUBLE_EQ(f.values[1], 0.5);
}

TEST(Sgd, MomentumAndDecay) {
    ParamStore<double> ps;
    ps.add("a", Branch::classification, Tensor<double>(Shape{1}, 1.0));
    ps.add("b", Branch::attention, Tensor<double>(Shape{1}, 1.0));
    std::vector<Tensor<double>> grads{Tensor<double>(Shape{1}, 0.5), Tensor<double>(Shape{1}, 0.5)};
    std::vector<Tensor<double>> vel;
    sgd_step(ps, grads, vel, {true, false}, 0.1, 0.9, 0.01);
    // v = 0.5 + 0.01 * 1 = 0.51; p = 1 - 0.051
    EXPECT_NEAR(ps.value(0)[0], 0.949, 1e-12);
    EXPECT_DOUBLE_EQ(ps.value(1)[0], 1.0);
    sgd_step(ps, grads, vel, {true, false}, 0.1, 0.9, 0.01);
    // v = 0.9 * 0.51 + 0.5 + 0.01 * 0.949
    const double v2 = 0.9 * 0.51 + 0.5 + 0.00949;
    EXPECT_NEAR(ps.value(0)[0], 0.949 - 0.1 * v2, 1e-12);
    EXPECT_DOUBLE_EQ(vel[1][0], 0.0);
}

TEST(Sgd, ClipGradNormRescalesTrainableOnly) {
    std::vector<Tensor<double>> g{Tensor<double>(Shape{2}, std::vector<double>{3, 4}),
                                  Tensor<double>(Shape{1}, std::vector<double>{100})};
    EXPECT_DOUBLE_EQ(clip_grad_norm(g, {true, false}, 10.0), 5.0);
    EXPECT_DOUBLE_EQ(g[0][0], 3.0);
    EXPECT_DOUBLE_EQ(clip_grad_norm(g, {true, false}, 1.0), 5.0);
    EXPECT_NEAR(g[0][0], 0.6, 1e-15);
    EXPECT_NEAR(g[0][1], 0.8, 1e-15);
    EXPECT_DOUBLE_EQ(g[1][0], 100.0);
    EXPECT_THROW((void)clip_grad_norm(g, {true}, 1.0), ShapeError);
}

TEST(Schedule, DefaultLearningRate) {
    EXPECT_DOUBLE_EQ(lr_at(0, TrainConfig{}), 0.001);
    TrainConfig c;
    c.grad_clip_norm = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Phases, TargetsAndMasks) {
    EXPECT_EQ(phase_branch(1), EvalBranch::cls);
    EXPECT_EQ(phase_branch(2), EvalBranch::att);
    EXPECT_EQ(phase_branch(3), EvalBranch::fused);
    EXPECT_THROW((void)phase_branch(4), ConfigError);

    ChestNet<float> model(tiny_model(), 1);
    const auto m1 = model.trainable_mask(1), m2 = model.trainable_mask(2), m3 = model.trainable_mask(3);
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        const bool cls = model.params().branch(i) == Branch::classification;
        EXPECT_EQ(m1[i], cls);
        EXPECT_EQ(m2[i], !cls);
        EXPECT_TRUE(m3[i]);
    }
}

TEST(TrainPhase, LossDecreasesAndIsDeterministic) {
    const Dataset ds = tiny_dataset(16, 5);
    TrainConfig tc;
    tc.max_iterations = 40;
    tc.batch_size = 8;
    tc.eval_interval = 1000;
    ChestNet<float> a(tiny_model(), 2), b(tiny_model(), 2);
    auto ra = train_phase(a, ds, nullptr, tc, 1);
    auto rb = train_phase(b, ds, nullptr, tc, 1);
    ASSERT_EQ(ra.curve.size(), 40u);
    double first = 0, last = 0;
    for (int i = 0; i < 5; ++i) {
        first += ra.curve[i].loss;
        last += ra.curve[35 + i].loss;
    }
    EXPECT_LT(last, first);
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        EXPECT_EQ(a.params().value(i).storage(), b.params().value(i).storage()) << a.params().name(i);
    }
    EXPECT_EQ(ra.best_iteration, 40u);
}

TEST(TrainPhase, PhaseTwoFreezesClassificationBranch) {
    const Dataset ds = tiny_dataset(12, 6);
    TrainConfig tc;
    tc.max_iterations = 5;
    tc.batch_size = 4;
    ChestNet<float> model(tiny_model(), 3);
    ParamStore<float> before = model.params();
    train_phase(model, ds, nullptr, tc, 2);
    bool attention_moved = false;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        const bool same = model.params().value(i).storage() == before.value(i).storage();
        if (model.params().branch(i) == Branch::classification) {
            EXPECT_TRUE(same) << model.params().name(i);
        } else {
            attention_moved = attention_moved || !same;
        }
    }
    EXPECT_TRUE(attention_moved);
}

TEST(TrainPhase, ValidationSelectsBestSnapshot) {
    const Dataset ds = tiny_dataset(16, 7);
    const Dataset val = tiny_dataset(8, 8);
    TrainConfig tc;
    tc.max_iterations = 12;
    tc.batch_size = 8;
    tc.eval_interval = 4;
    ChestNet<float> model(tiny_model(), 4);
    auto r = train_phase(model, ds, &val, tc, 1);
    ASSERT_TRUE(r.best_val_auc.has_value());
    EXPECT_EQ(r.best_iteration % 4, 0u);
    EXPECT_LE(r.best_iteration, 12u);
    const auto report = evaluate(model, val, EvalBranch::cls);
    EXPECT_NEAR(*report.average_auc, *r.best_val_auc, 1e-12);
}

TEST(TrainPhase, RejectsBadInput) {
    ChestNet<float> model(tiny_model(), 1);
    TrainConfig tc;
    EXPECT_THROW(train_phase(model, Dataset{}, nullptr, tc, 1), ConfigError);
    const Dataset ds = tiny_dataset(4, 1);
    tc.batch_size = 0;
    EXPECT_THROW(train_phase(model, ds, nullptr, tc, 1), ConfigError);
}

TEST(Predict, ShapesAndBranches) {
    const Dataset ds = tiny_dataset(5, 9);
    ChestNet<float> model(tiny_model(), 5);
    auto cls = predict(model, ds, EvalBranch::cls, 2);
    auto att = predict(model, ds, EvalBranch::att, 2);
    auto fused = predict(model, ds, EvalBranch::fused, 3);
    ASSERT_EQ(cls.size(), 10u);
    for (std::size_t i = 0; i < cls.size(); ++i) {
        EXPECT_NEAR(fused[i], 0.5 * (cls[i] + att[i]), 1e-6);
        EXPECT_GT(cls[i], 0.0);
        EXPECT_LT(cls[i], 1.0);
    }
    // Batch size does not change scores.
    EXPECT_EQ(predict(model, ds, EvalBranch::cls, 5), cls);
}
