#include <gtest/gtest.h>

#include "chestnet/graph.hpp"
#include "chestnet/ops.hpp"
#include "oracles.hpp"

using namespace chestnet;
using chestnet::testing::random_tensor;

TEST(Shape, NumelAndString) {
    EXPECT_EQ((Shape{2, 3, 4}).numel(), 24u);
    EXPECT_EQ(Shape{}.numel(), 1u);
    EXPECT_EQ((Shape{2, 3}).str(), "[2,3]");
}

TEST(Tensor, ConstructionChecksSize) {
    EXPECT_THROW(Tensor<float>(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
    Tensor<float> t(Shape{2, 2}, 1.5f);
    EXPECT_EQ(t.numel(), 4u);
    EXPECT_FLOAT_EQ(t[3], 1.5f);
}

TEST(Tensor, ReshapeItemAndAdd) {
    Tensor<double> t(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
    EXPECT_THROW((void)t.reshaped(Shape{4}), ShapeError);
    auto r = t.reshaped(Shape{3, 2});
    EXPECT_EQ(r.shape(), (Shape{3, 2}));
    EXPECT_THROW((void)t.item(), ContractError);
    EXPECT_DOUBLE_EQ(Tensor<double>::scalar(4.0).item(), 4.0);
    t.add_(t);
    EXPECT_DOUBLE_EQ(t[5], 12.0);
    EXPECT_THROW(t.add_(r), ShapeError);
}

TEST(Tensor, FiniteCheck) {
    Tensor<float> t(Shape{3});
    EXPECT_TRUE(t.all_finite());
    t[1] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_FALSE(t.all_finite());
}

TEST(Graph, LinearityOfGradients) {
    // d/dx sum(2x + x*y) = 2 + y; d/dy = x
    Graph<double> g;
    Rng rng(1);
    auto xv = random_tensor<double>(Shape{3, 4}, rng);
    auto yv = random_tensor<double>(Shape{3, 4}, rng);
    auto x = g.leaf(xv, true), y = g.leaf(yv, true);
    auto loss = ops::sum(ops::add(ops::scale(x, 2.0), ops::mul(x, y)));
    auto grads = g.backward(loss);
    auto gx = grads.get(x), gy = grads.get(y);
    for (std::size_t i = 0; i < xv.numel(); ++i) {
        EXPECT_DOUBLE_EQ(gx[i], 2.0 + yv[i]);
        EXPECT_DOUBLE_EQ(gy[i], xv[i]);
    }
}

TEST(Graph, BackwardRequiresScalar) {
    Graph<double> g;
    auto x = g.leaf(Tensor<double>(Shape{2}), true);
    EXPECT_THROW(g.backward(x), ContractError);
}

TEST(Graph, DetachStopsGradient) {
    Graph<double> g;
    auto x = g.leaf(Tensor<double>(Shape{2}, 3.0), true);
    auto d = g.detach(x);
    auto loss = ops::sum(ops::add(ops::mul(d, x), x));  // d treated as constant
    auto grads = g.backward(loss);
    EXPECT_DOUBLE_EQ(grads.get(x)[0], 4.0);
    EXPECT_FALSE(d.requires_grad());
}

TEST(Graph, GradWrtIntermediateWithoutTrainableLeaves) {
    Graph<double> g;
    auto x = g.constant(Tensor<double>(Shape{3}, std::vector<double>{1, -2, 3}));
    auto h = ops::scale(x, 1.0);
    auto s = ops::sum(ops::mul(h, h));
    auto r = g.grad_wrt(s, h);
    ASSERT_TRUE(r.reachable);
    EXPECT_DOUBLE_EQ(r.grad[0], 2.0);
    EXPECT_DOUBLE_EQ(r.grad[1], -4.0);
    EXPECT_DOUBLE_EQ(r.grad[2], 6.0);
}

TEST(Graph, GradWrtUnreachableIsZero) {
    Graph<double> g;
    auto a = g.leaf(Tensor<double>(Shape{2}, 1.0), true);
    auto b = g.leaf(Tensor<double>(Shape{2}, 1.0), true);
    auto s = ops::sum(a);
    auto r = g.grad_wrt(s, b);
    EXPECT_FALSE(r.reachable);
    EXPECT_DOUBLE_EQ(r.grad[0], 0.0);
}

TEST(Graph, VjpMatchesSeededBackward) {
    Graph<double> g;
    Rng rng(2);
    auto x = g.leaf(random_tensor<double>(Shape{2, 3}, rng), true);
    auto y = ops::sigmoid(ops::mul(x, x));
    auto seed = random_tensor<double>(Shape{2, 3}, rng);
    auto v = g.vjp_wrt(y, seed, x);
    auto full = g.backward(y, seed).get(x);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(v.grad[i], full[i], 1e-15);
}

TEST(Graph, FrozenParamsAreConstantLeaves) {
    ParamStore<double> ps;
    ps.add("a", Branch::classification, Tensor<double>(Shape{2}, 2.0));
    ps.add("b", Branch::attention, Tensor<double>(Shape{2}, 3.0));
    Graph<double> g(&ps, {false, true});
    auto loss = ops::sum(ops::mul(g.param(0), g.param(1)));
    auto grads = g.param_grads(g.backward(loss));
    EXPECT_DOUBLE_EQ(grads[0][0], 0.0);
    EXPECT_DOUBLE_EQ(grads[1][0], 2.0);
    EXPECT_FALSE(g.param(0).requires_grad());
    EXPECT_EQ(g.param(1).id(), g.param(1).id());
}

TEST(Graph, ReplayIsBitIdentical) {
    Graph<float> g;
    Rng rng(5);
    auto x = g.constant(random_tensor<float>(Shape{2, 3, 8, 8}, rng));
    auto w = g.leaf(random_tensor<float>(Shape{4, 3, 3, 3}, rng), true);
    auto b = g.leaf(random_tensor<float>(Shape{4}, rng), true);
    auto y = ops::spatial_softmax(ops::maxpool2d(ops::relu(ops::conv2d(x, w, b, {1, 1})), 2, 2));
    (void)ops::sum(ops::global_avg_pool(y));
    EXPECT_FALSE(g.replay_mismatch().has_value());
}
