#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <tpch/kernelizer.hpp>

#include "oracles.hpp"

using namespace tpch;

TEST(SampleAnchors, AllSamplesWhenMEqualsN) {
    const auto idx = sample_anchor_indices(17, 17, 3);
    std::vector<Index> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    for (Index i = 0; i < 17; ++i)
        EXPECT_EQ(sorted[size_t(i)], i);
}

TEST(SampleAnchors, SingleAnchorInRange) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto idx = sample_anchor_indices(9, 1, seed);
        ASSERT_EQ(idx.size(), 1u);
        EXPECT_GE(idx[0], 0);
        EXPECT_LT(idx[0], 9);
    }
}

TEST(SampleAnchors, MatchesFisherYatesOracle) {
    for (std::uint64_t seed : {0ull, 1ull, 42ull}) {
        EXPECT_EQ(sample_anchor_indices(100, 10, seed), oracle::fisher_yates_prefix(100, 10, seed));
    }
}

TEST(SampleAnchors, DistinctAndSharedAcrossViews) {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd a = oracle::random_matrix(3, 50, rng), b = oracle::random_matrix(7, 50, rng);
    const AnchorSet sa = sample_anchors(a, 12, 5), sb = sample_anchors(b, 12, 5);
    EXPECT_EQ(sa.source_indices, sb.source_indices);
    EXPECT_EQ(std::set<Index>(sa.source_indices.begin(), sa.source_indices.end()).size(), 12u);
    for (std::size_t j = 0; j < 12; ++j)
        EXPECT_EQ(sa.anchors.col(Index(j)), a.col(sa.source_indices[j]));
}

TEST(SampleAnchors, TooManyAnchors) {
    try {
        sample_anchor_indices(5, 6, 0);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::AnchorCountExceedsSamples);
    }
}

TEST(EstimateBandwidth, DegenerateFallback) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(2, 4, 1.5);
    EXPECT_EQ(estimate_bandwidth(x, anchors_at(x, std::vector<Index>{0})), 1.0);
}

TEST(EstimateBandwidth, TwoPointExample) {
    Eigen::MatrixXd x(1, 2);
    x << 0.0, 2.0;
    EXPECT_DOUBLE_EQ(estimate_bandwidth(x, anchors_at(x, std::vector<Index>{0})), 2.0);
}

TEST(EstimateBandwidth, MatchesDoubleLoop) {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd x = oracle::random_matrix(6, 80, rng);
    const AnchorSet a = sample_anchors(x, 15, 3);
    EXPECT_NEAR(estimate_bandwidth(x, a), oracle::bandwidth(x, a.anchors), 1e-10);
}

TEST(Kernelize, KnownEntries) {
    Eigen::MatrixXd x(1, 2);
    x << 0.0, 2.0;
    const AnchorSet a = anchors_at(x, std::vector<Index>{1});
    const BipartiteGraph g = kernelize(x, a, 4.0);
    EXPECT_NEAR(g.values(0, 0), 0.36787944117144233, 1e-15);
    EXPECT_EQ(g.values(0, 1), 1.0);
}

TEST(Kernelize, WideBandwidthLimit) {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = oracle::random_matrix(3, 20, rng);
    const BipartiteGraph g = kernelize(x, sample_anchors(x, 5, 1), 1e9);
    EXPECT_LE((g.values.array() - 1.0).abs().maxCoeff(), 1e-6);
}

TEST(Kernelize, RejectsBadBandwidth) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 3);
    const AnchorSet a = anchors_at(x, std::vector<Index>{0});
    for (double d : {0.0, -1.0, std::numeric_limits<double>::quiet_NaN()}) {
        try {
            kernelize(x, a, d);
            FAIL();
        } catch (const Error &e) {
            EXPECT_EQ(e.code(), Errc::NonPositiveBandwidth);
        }
    }
}

TEST(Kernelize, EntriesInUnitIntervalAndMonotone) {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd x = 30.0 * oracle::random_matrix(4, 60, rng);
    const AnchorSet a = sample_anchors(x, 10, 2);
    const BipartiteGraph g = kernelize(x, a, 0.5);
    EXPECT_GT(g.values.minCoeff(), 0.0);
    EXPECT_LE(g.values.maxCoeff(), 1.0);
    for (Index j = 0; j < 10; ++j)
        for (Index i = 0; i < 60; ++i) {
            const bool same = x.col(i) == a.anchors.col(j);
            EXPECT_EQ(g.values(j, i) == 1.0, same);
        }
    for (Index j = 0; j < 10; ++j)
        for (Index i = 1; i < 60; ++i) {
            const double di = (x.col(i) - a.anchors.col(j)).squaredNorm();
            const double d0 = (x.col(0) - a.anchors.col(j)).squaredNorm();
            const double gi = std::exp(-di / 0.5), g0 = std::exp(-d0 / 0.5);
            if (di > d0 && g0 > 1e-300 && gi > 1e-300)
                EXPECT_LT(g.values(j, i), g.values(j, 0));
        }
}

TEST(Kernelize, PermutationEquivariantAndDeterministic) {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd x = oracle::random_matrix(3, 30, rng);
    const AnchorSet a = sample_anchors(x, 6, 9);
    const BipartiteGraph g = kernelize(x, a, 2.0);
    EXPECT_EQ(g.values, kernelize(x, a, 2.0).values);
    std::vector<Index> perm(30);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd xp(3, 30);
    for (Index i = 0; i < 30; ++i)
        xp.col(i) = x.col(perm[size_t(i)]);
    const BipartiteGraph gp = kernelize(xp, a, 2.0);
    for (Index i = 0; i < 30; ++i)
        EXPECT_EQ(gp.values.col(i), g.values.col(perm[size_t(i)]));
}

TEST(Standardize, ZeroMeanUnitVarianceAndConstantRows) {
    std::mt19937_64 rng(6);
    Eigen::MatrixXd x = 5.0 * oracle::random_matrix(3, 40, rng).array() + 2.0;
    x.row(1).setConstant(4.0);
    const Eigen::MatrixXd z = standardize(x);
    for (Index r : {0, 2}) {
        EXPECT_NEAR(z.row(r).mean(), 0.0, 1e-12);
        EXPECT_NEAR(z.row(r).squaredNorm() / 40.0, 1.0, 1e-12);
    }
    EXPECT_EQ(z.row(1).norm(), 0.0);
}

TEST(KernelizeViews, SharedAnchorsAndValidation) {
    std::mt19937_64 rng(7);
    const std::vector<ViewMatrix> views{oracle::random_matrix(4, 25, rng),
                                        oracle::random_matrix(2, 25, rng)};
    KernelOptions opt;
    opt.anchors = 8;
    opt.seed = 3;
    const KernelizedViews kv = kernelize_views(views, opt);
    ASSERT_EQ(kv.graphs.size(), 2u);
    EXPECT_EQ(kv.anchor_indices, sample_anchor_indices(25, 8, 3));
    for (std::size_t p = 0; p < 2; ++p) {
        EXPECT_EQ(kv.graphs[p].anchors(), 8);
        EXPECT_EQ(kv.graphs[p].samples(), 25);
        for (std::size_t j = 0; j < 8; ++j)
            EXPECT_EQ(kv.graphs[p].values(Index(j), kv.anchor_indices[j]), 1.0);
    }
    opt.anchors = 0;
    EXPECT_EQ(kernelize_views(views, opt).graphs[0].anchors(), 25);

    const std::vector<ViewMatrix> ragged{oracle::random_matrix(2, 5, rng),
                                         oracle::random_matrix(2, 6, rng)};
    try {
        kernelize_views(ragged, opt);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::InconsistentSampleCounts);
    }
}
