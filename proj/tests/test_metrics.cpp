#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chestnet/metrics.hpp"
#include "chestnet/rng.hpp"
#include "oracles.hpp"

using namespace chestnet;
using chestnet::testing::pair_count_auc;

namespace {

void random_set(Rng& rng, std::size_t n, bool ties, std::vector<double>& s, std::vector<std::uint8_t>& y) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution b(0.4);
    s.resize(n);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = ties ? std::floor(u(rng) * 6.0) / 6.0 : u(rng);
        y[i] = b(rng) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
}

}  // namespace

TEST(Diagnose, StrictThreshold) {
    EXPECT_EQ(diagnose(LabelVector{{0.51, 0.5, 0.49}, LabelRole::fused}), (std::vector<std::uint8_t>{1, 0, 0}));
    EXPECT_EQ(diagnose(LabelVector{{0.0, 0.0}, LabelRole::fused}), (std::vector<std::uint8_t>{0, 0}));
    EXPECT_EQ(diagnose(LabelVector{{1.0, 1.0}, LabelRole::fused}), (std::vector<std::uint8_t>{1, 1}));
}

TEST(Roc, PerfectSeparation) {
    const std::vector<double> s{0.9, 0.1};
    const std::vector<std::uint8_t> y{1, 0};
    const auto c = roc_curve(s, y);
    ASSERT_EQ(c.points.size(), 3u);
    EXPECT_DOUBLE_EQ(c.points[1].fpr, 0.0);
    EXPECT_DOUBLE_EQ(c.points[1].tpr, 1.0);
    EXPECT_DOUBLE_EQ(auc(s, y), 1.0);
}

TEST(Roc, AllTiesGiveDiagonal) {
    const std::vector<double> s(6, 0.3);
    const std::vector<std::uint8_t> y{1, 0, 1, 0, 0, 1};
    const auto c = roc_curve(s, y);
    ASSERT_EQ(c.points.size(), 2u);
    EXPECT_DOUBLE_EQ(c.points[1].fpr, 1.0);
    EXPECT_DOUBLE_EQ(auc(s, y), 0.5);
}

TEST(Roc, SingleClassIsUndefined) {
    const std::vector<double> s{0.2, 0.4};
    const std::vector<std::uint8_t> y{1, 1};
    try {
        (void)roc_curve(s, y, 3);
        FAIL() << "expected UndefinedMetricError";
    } catch (const UndefinedMetricError& e) {
        EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
    }
}

TEST(Roc, CurveInvariantsOnRandomSets) {
    Rng rng(3);
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (int rep = 0; rep < 20; ++rep) {
        random_set(rng, 50, rep % 2 == 0, s, y);
        const auto c = roc_curve(s, y);
        EXPECT_DOUBLE_EQ(c.points.front().fpr, 0.0);
        EXPECT_DOUBLE_EQ(c.points.front().tpr, 0.0);
        EXPECT_DOUBLE_EQ(c.points.back().fpr, 1.0);
        EXPECT_DOUBLE_EQ(c.points.back().tpr, 1.0);
        for (std::size_t i = 1; i < c.points.size(); ++i) {
            EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
            EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
        }
    }
}

TEST(Auc, MatchesPairCountOracle) {
    Rng rng(4);
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (int rep = 0; rep < 100; ++rep) {
        random_set(rng, 2 + rng() % 199, rep % 3 == 0, s, y);
        EXPECT_NEAR(auc(s, y), pair_count_auc(s, y), 1e-9);
    }
}

TEST(Auc, PerfectInvertedAndComplement) {
    const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
    EXPECT_DOUBLE_EQ(auc(s, std::vector<std::uint8_t>{0, 0, 1, 1}), 1.0);
    EXPECT_DOUBLE_EQ(auc(s, std::vector<std::uint8_t>{1, 1, 0, 0}), 0.0);

    Rng rng(5);
    std::vector<double> r;
    std::vector<std::uint8_t> y;
    random_set(rng, 80, false, r, y);
    std::vector<double> neg(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) neg[i] = -r[i];
    EXPECT_NEAR(auc(r, y) + auc(neg, y), 1.0, 1e-12);
}

TEST(Auc, InvariantUnderMonotoneTransform) {
    Rng rng(6);
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    random_set(rng, 120, true, s, y);
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = 0.5 + 0.25 * std::pow(s[i] - 0.5, 3);
    EXPECT_DOUBLE_EQ(auc(s, y), auc(t, y));
}

TEST(Report, AverageOverIncludedClasses) {
    // Three samples, three classes; class 2 has no negatives.
    const std::vector<double> scores{0.9, 0.2, 0.7, 0.1, 0.8, 0.6, 0.05, 0.5, 0.9};
    const std::vector<std::uint8_t> labels{1, 0, 1, 0, 1, 1, 1, 0, 1};
    const auto r = build_report(scores, labels, 3, {"a", "b", "c"}, "fused");
    ASSERT_EQ(r.per_class_auc.size(), 3u);
    EXPECT_DOUBLE_EQ(*r.per_class_auc[0], 0.5);
    EXPECT_DOUBLE_EQ(*r.per_class_auc[1], 1.0);
    EXPECT_FALSE(r.per_class_auc[2].has_value());
    EXPECT_EQ(r.excluded, (std::vector<std::size_t>{2}));
    EXPECT_DOUBLE_EQ(*r.average_auc, 0.75);
    EXPECT_EQ(r.positives, (std::vector<std::size_t>{2, 1, 3}));
    EXPECT_EQ(r.negatives, (std::vector<std::size_t>{1, 2, 0}));
    EXPECT_EQ(r.samples, 3u);
    EXPECT_EQ(roc_curves(scores, labels, 3).size(), 2u);
}

TEST(Report, ExactAndConstantScorers) {
    const std::vector<std::uint8_t> labels{1, 0, 0, 1, 1, 1, 0, 0};
    std::vector<double> exact(labels.begin(), labels.end());
    const auto r1 = build_report(exact, labels, 2, {"a", "b"}, "cls");
    EXPECT_DOUBLE_EQ(*r1.average_auc, 1.0);
    const auto r2 = build_report(std::vector<double>(8, 0.3), labels, 2, {"a", "b"}, "cls");
    EXPECT_DOUBLE_EQ(*r2.per_class_auc[0], 0.5);
    EXPECT_DOUBLE_EQ(*r2.per_class_auc[1], 0.5);
}
