#include <gtest/gtest.h>

#include <limits>
#include <random>

#include <tpch/datasets.hpp>
#include <tpch/kernelizer.hpp>
#include <tpch/solver.hpp>

#include "oracles.hpp"

using namespace tpch;

namespace {

std::vector<BipartiteGraph> random_graphs(Index v, Index m, Index n, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::vector<BipartiteGraph> out;
    for (Index p = 0; p < v; ++p) {
        BipartiteGraph g{Eigen::MatrixXd(m, n)};
        for (Index e = 0; e < g.values.size(); ++e)
            g.values.data()[e] = u(rng);
        out.push_back(g);
    }
    return out;
}

const GraphConditioning kRaw{false, false};

/// A state part-way through a run, so multipliers and penalty are non-trivial.
SolverState warm_state(const Problem &prob, const SolverConfig &cfg, int steps) {
    SolverState s = init_state(prob, cfg);
    for (int i = 0; i < steps; ++i) {
        update_q(s, prob, cfg);
        update_b(s, prob, cfg);
        update_a(s, cfg);
        update_e(s, cfg);
        update_multipliers(s, cfg);
    }
    return s;
}

std::vector<BipartiteGraph> synthetic_graphs(Index k, Index n, Index m, double sep,
                                             std::uint64_t seed, std::vector<Index> *labels) {
    const MultiViewData d = gen_synthetic_gaussian(k, 2, n, {5, 5}, sep, seed);
    if (labels)
        *labels = *d.labels;
    KernelOptions opt;
    opt.anchors = m;
    opt.seed = seed;
    return kernelize_views(d.views, opt).graphs;
}

} // namespace

TEST(SolverConfig, ValidatesBounds) {
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.bits = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.rho = 1.0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.mu0 = 0.0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(ConditionGraph, UnitColumnSumsThenZeroRowMeans) {
    std::mt19937_64 rng(1);
    const auto g = random_graphs(1, 5, 9, rng);
    const Eigen::MatrixXd n = condition_graph(g[0].values, {true, false});
    EXPECT_LE((n.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
    const Eigen::MatrixXd c = condition_graph(g[0].values, {true, true});
    EXPECT_LE(c.rowwise().sum().cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(condition_graph(g[0].values, kRaw), g[0].values);
    EXPECT_EQ(condition_graph(Eigen::MatrixXd::Zero(3, 4), {}).norm(), 0.0);
}

TEST(InitState, DeterministicAndConsistent) {
    std::mt19937_64 rng(2);
    const Problem prob(random_graphs(2, 6, 10, rng));
    SolverConfig cfg;
    cfg.bits = 4;
    cfg.seed = 9;
    const SolverState a = init_state(prob, cfg), b = init_state(prob, cfg);
    EXPECT_EQ(a.Q, b.Q);
    EXPECT_EQ(a.B, b.B);
    EXPECT_EQ(a.mu, cfg.mu0);
    EXPECT_EQ((Tensor3::stack(a.Q) - a.A).norm(), 0.0);
    EXPECT_EQ((Tensor3::stack(a.B) - a.E).norm(), 0.0);
    EXPECT_EQ(a.Y.norm(), 0.0);
    EXPECT_EQ(a.J.norm(), 0.0);
    for (std::size_t p = 0; p < 2; ++p)
        EXPECT_EQ(a.B[p], sign_of(a.Q[p].transpose() * prob.graphs[p].values));
}

TEST(InitState, ProjectionDrawsAreScaledGaussians) {
    std::mt19937_64 rng(3);
    const Problem prob(random_graphs(1, 400, 5, rng));
    SolverConfig cfg;
    cfg.bits = 50;
    const SolverState s = init_state(prob, cfg);
    const double var = s.Q[0].squaredNorm() / double(s.Q[0].size());
    EXPECT_NEAR(var * 400.0, 1.0, 0.05);
    EXPECT_NEAR(s.Q[0].mean(), 0.0, 0.01);
}

TEST(InitState, SharedOrPerViewProjections) {
    std::mt19937_64 rng(4);
    const Problem prob(random_graphs(3, 5, 7, rng));
    SolverConfig cfg;
    cfg.bits = 3;
    cfg.shared_init = true;
    const SolverState shared = init_state(prob, cfg);
    EXPECT_EQ(shared.Q[0], shared.Q[2]);
    cfg.shared_init = false;
    const SolverState own = init_state(prob, cfg);
    EXPECT_NE(own.Q[0], own.Q[1]);
    EXPECT_EQ(own.Q[0], shared.Q[0]);
}

TEST(InitState, ZeroGraphsGiveAllPlusOne) {
    const Problem prob({BipartiteGraph{Eigen::MatrixXd::Zero(3, 5)}});
    SolverConfig cfg;
    cfg.bits = 4;
    const SolverState s = init_state(prob, cfg);
    EXPECT_TRUE((s.B[0].array() == 1.0).all());
}

TEST(Problem, RejectsInconsistentGraphs) {
    std::vector<BipartiteGraph> g{BipartiteGraph{Eigen::MatrixXd::Ones(3, 5)},
                                  BipartiteGraph{Eigen::MatrixXd::Ones(3, 6)}};
    try {
        Problem p(g);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::InconsistentSampleCounts);
    }
}

TEST(UpdateQ, AlphaZeroIsPenaltyMinimizer) {
    std::mt19937_64 rng(5);
    const Problem prob(random_graphs(2, 4, 6, rng), kRaw);
    SolverConfig cfg;
    cfg.bits = 2;
    SolverState s = warm_state(prob, cfg, 3);
    cfg.alpha = 0.0;
    update_q(s, prob, cfg);
    for (Index p = 0; p < 2; ++p)
        EXPECT_LE((s.Q[size_t(p)] - (s.A.slice(p) - s.Y.slice(p) / s.mu)).norm(), 1e-12);
}

TEST(UpdateQ, LargePenaltyLimit) {
    std::mt19937_64 rng(6);
    const Problem prob(random_graphs(1, 4, 6, rng), kRaw);
    SolverConfig cfg;
    cfg.bits = 2;
    SolverState s = warm_state(prob, cfg, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double mu : {1e2, 1e4, 1e6}) {
        s.mu = mu;
        update_q(s, prob, cfg);
        const double gap = (s.Q[0] - (s.A.slice(0) - s.Y.slice(0) / mu)).norm();
        EXPECT_LT(gap, prev);
        EXPECT_LE(gap * mu, 100.0);
        prev = gap;
    }
}

TEST(UpdateQ, BeatsRandomPerturbations) {
    std::mt19937_64 rng(7);
    const Problem prob(random_graphs(1, 4, 6, rng), kRaw);
    SolverConfig cfg;
    cfg.bits = 2;
    cfg.alpha = 0.8;
    SolverState s = warm_state(prob, cfg, 4);
    update_q(s, prob, cfg);
    const auto &phi = prob.graphs[0].values;
    const auto f = [&](const Eigen::MatrixXd &Q) {
        return cfg.alpha * (Q.transpose() * phi - s.B[0]).squaredNorm() +
               0.5 * s.mu * (Q - Eigen::MatrixXd(s.A.slice(0)) + s.Y.slice(0) / s.mu).squaredNorm();
    };
    const double best = f(s.Q[0]);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        Eigen::MatrixXd p = s.Q[0];
        for (Index e = 0; e < p.size(); ++e)
            p.data()[e] += 1e-3 * normal(rng);
        ASSERT_LE(best, f(p));
    }
}

TEST(UpdateQ, NormalEquationResidual) {
    std::mt19937_64 rng(8);
    const Problem prob(random_graphs(2, 7, 20, rng));
    SolverConfig cfg;
    cfg.bits = 3;
    SolverState s = init_state(prob, cfg);
    for (int it = 0; it < 30; ++it) {
        update_q(s, prob, cfg);
        EXPECT_LE(q_stationarity(s, prob, cfg), 1e-8);
        update_b(s, prob, cfg);
        update_a(s, cfg);
        update_e(s, cfg);
        update_multipliers(s, cfg);
    }
}

TEST(UpdateB, SignTieRule) {
    const Problem prob({BipartiteGraph{Eigen::MatrixXd::Zero(2, 3)}}, kRaw);
    SolverConfig cfg;
    cfg.bits = 2;
    SolverState s = init_state(prob, cfg);
    s.E = Tensor3(2, 3, 1);
    s.J = Tensor3(2, 3, 1);
    update_b(s, prob, cfg);
    EXPECT_TRUE((s.B[0].array() == 1.0).all());
    s.E.slice(0).setConstant(-1.0);
    update_b(s, prob, cfg);
    EXPECT_TRUE((s.B[0].array() == -1.0).all());
}

TEST(UpdateB, MatchesBruteForceEnumeration) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<Index> pick_l(1, 4);
    std::uniform_real_distribution<double> mu_exp(-3.0, 2.0), alpha_exp(-2.0, 1.0);
    int checked = 0;
    while (checked < 200) {
        const Index l = pick_l(rng), n = std::uniform_int_distribution<Index>(1, 12 / l)(rng);
        const Index m = std::uniform_int_distribution<Index>(1, 4)(rng);
        const Problem prob(random_graphs(2, m, n, rng), kRaw);
        SolverConfig cfg;
        cfg.bits = l;
        cfg.alpha = std::pow(10.0, alpha_exp(rng));
        cfg.seed = std::uint64_t(checked);
        SolverState s = init_state(prob, cfg);
        s.mu = std::pow(10.0, mu_exp(rng));
        for (Index p = 0; p < 2; ++p) {
            s.E.slice(p) = oracle::random_matrix(l, n, rng);
            s.J.slice(p) = oracle::random_matrix(l, n, rng);
        }
        update_b(s, prob, cfg);
        for (Index p = 0; p < 2; ++p) {
            const Eigen::MatrixXd P = s.Q[size_t(p)].transpose() * prob.graphs[size_t(p)].values;
            const Eigen::MatrixXd T = s.E.slice(p) - s.J.slice(p) / s.mu;
            ASSERT_EQ(s.B[size_t(p)], oracle::best_sign_matrix(P, T, cfg.alpha, s.mu))
                << "instance " << checked;
        }
        ++checked;
    }
}

TEST(UpdateA, SubThresholdWithZeroZetaIsNearIdentity) {
    std::mt19937_64 rng(10);
    const Problem prob(random_graphs(2, 5, 8, rng), kRaw);
    SolverConfig cfg;
    cfg.bits = 3;
    cfg.zeta = 0.0;
    SolverState s = warm_state(prob, cfg, 2);
    s.mu = 1e12;
    const Tensor3 target = Tensor3::stack(s.Q) + s.Y * (1.0 / s.mu);
    update_a(s, cfg);
    EXPECT_LE((s.A - target).norm(), 1e-10);
}

TEST(UpdateA, ZeroInputsAndShrinkage) {
    std::mt19937_64 rng(11);
    const Problem prob(random_graphs(2, 5, 8, rng), kRaw);
    SolverConfig cfg;
    cfg.bits = 3;
    SolverState s = init_state(prob, cfg);
    for (auto &q : s.Q)
        q.setZero();
    s.Y = Tensor3(5, 3, 2);
    update_a(s, cfg);
    EXPECT_EQ(s.A.norm(), 0.0);

    SolverState w = warm_state(prob, cfg, 3);
    const Tensor3 target = Tensor3::stack(w.Q) + w.Y * (1.0 / w.mu);
    update_a(w, cfg);
    EXPECT_LE(oracle::nuclear_norm(oracle::spectral_singular_values(w.A)),
              oracle::nuclear_norm(oracle::spectral_singular_values(target)) + 1e-12);
}

TEST(UpdateE, MirrorsUpdateA) {
    std::mt19937_64 rng(12);
    const Problem prob(random_graphs(2, 5, 8, rng), kRaw);
    SolverConfig cfg;
    cfg.bits = 3;
    cfg.zeta = 0.0;
    SolverState s = warm_state(prob, cfg, 2);
    s.mu = 1e12;
    Tensor3 target = Tensor3::stack(s.B) + s.J * (1.0 / s.mu);
    update_e(s, cfg);
    EXPECT_LE((s.E - target).norm(), 1e-10);

    cfg.zeta = 0.1;
    SolverState w = warm_state(prob, cfg, 3);
    target = Tensor3::stack(w.B) + w.J * (1.0 / w.mu);
    update_e(w, cfg);
    EXPECT_LE(oracle::nuclear_norm(oracle::spectral_singular_values(w.E)),
              oracle::nuclear_norm(oracle::spectral_singular_values(target)) + 1e-12);

    SolverState z = init_state(prob, cfg);
    for (auto &b : z.B)
        b.setZero();
    update_e(z, cfg);
    EXPECT_EQ(z.E.norm(), 0.0);
}

TEST(Lambda, UsesLeadingDimension) {
    EXPECT_DOUBLE_EQ(lambda_for(100, 2, 400), 1.0 / std::sqrt(100.0 * 400.0));
    EXPECT_DOUBLE_EQ(lambda_for(1, 3, 4), 1.0 / std::sqrt(12.0));
}

TEST(UpdateMultipliers, FeasiblePointOnlyGrowsPenalty) {
    std::mt19937_64 rng(13);
    const Problem prob(random_graphs(2, 4, 5, rng));
    SolverConfig cfg;
    cfg.bits = 2;
    SolverState s = warm_state(prob, cfg, 2);
    s.A = Tensor3::stack(s.Q);
    s.E = Tensor3::stack(s.B);
    const Tensor3 Y = s.Y, J = s.J;
    const double mu = s.mu;
    update_multipliers(s, cfg);
    EXPECT_EQ(s.Y, Y);
    EXPECT_EQ(s.J, J);
    EXPECT_EQ(s.mu, 2.0 * mu);
    s.mu = cfg.mu_max;
    update_multipliers(s, cfg);
    EXPECT_EQ(s.mu, cfg.mu_max);
}

TEST(UpdateMultipliers, MatchesHandAccumulation) {
    std::mt19937_64 rng(14);
    const Problem prob(random_graphs(2, 4, 5, rng));
    SolverConfig cfg;
    cfg.bits = 2;
    SolverState s = init_state(prob, cfg);
    std::vector<double> y(s.Y.data().begin(), s.Y.data().end());
    for (int it = 0; it < 5; ++it) {
        update_q(s, prob, cfg);
        update_b(s, prob, cfg);
        update_a(s, cfg);
        update_e(s, cfg);
        const Tensor3 Q = Tensor3::stack(s.Q);
        for (std::size_t e = 0; e < y.size(); ++e)
            y[e] = y[e] + s.mu * (Q.data()[e] - s.A.data()[e]);
        update_multipliers(s, cfg);
        for (std::size_t e = 0; e < y.size(); ++e)
            ASSERT_EQ(s.Y.data()[e], y[e]);
    }
}

TEST(Objective, DirectEvaluation) {
    const Index m = 3, l = 2, n = 4, v = 2;
    const Problem prob({BipartiteGraph{Eigen::MatrixXd::Zero(m, n)},
                        BipartiteGraph{Eigen::MatrixXd::Zero(m, n)}});
    SolverConfig cfg;
    cfg.bits = l;
    cfg.alpha = 0.5;
    SolverState s = init_state(prob, cfg);
    for (auto &q : s.Q)
        q.setZero();
    Tensor3 ones(l, n, v);
    for (double &x : ones.data())
        x = 1.0;
    const double expect = cfg.alpha * double(v * l * n) +
                          oracle::nuclear_norm(oracle::spectral_singular_values(ones)) +
                          cfg.zeta * oracle::tnn(ones);
    EXPECT_NEAR(objective(s, prob, cfg), expect, 1e-10);

    cfg.alpha = 0.0;
    for (auto &b : s.B)
        b.setZero();
    EXPECT_EQ(objective(s, prob, cfg), 0.0);
}

TEST(FuseHash, MajorityWithTiesToPlus) {
    const SignMatrix a = Eigen::MatrixXd::Constant(1, 1, 1.0), b = -a;
    EXPECT_EQ(fuse_hash(std::vector<SignMatrix>{a}), a);
    EXPECT_EQ(fuse_hash(std::vector<SignMatrix>{a, a, b}), a);
    EXPECT_EQ(fuse_hash(std::vector<SignMatrix>{a, b}), a);
    EXPECT_EQ(fuse_hash(std::vector<SignMatrix>{b, b, a}), b);
    try {
        fuse_hash(std::vector<SignMatrix>{a, Eigen::MatrixXd::Ones(2, 1)});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::ShapeMismatch);
    }
}

TEST(Solve, ZeroIterationsReturnsInitialCodes) {
    std::mt19937_64 rng(15);
    const Problem prob(random_graphs(2, 5, 9, rng));
    SolverConfig cfg;
    cfg.bits = 3;
    cfg.max_iter = 0;
    const SolveResult r = solve(prob, cfg);
    ASSERT_EQ(r.history.size(), 1u);
    EXPECT_EQ(r.history[0].iter, 0);
    const SolverState s = init_state(prob, cfg);
    EXPECT_EQ(r.codes.per_view, s.B);
    EXPECT_EQ(r.codes.fused, fuse_hash(s.B));
}

TEST(Solve, ConvergesOnSeparatedTwoClusterData) {
    SolverConfig cfg;
    cfg.bits = 8;
    cfg.seed = 3;
    const SolveResult r = solve(synthetic_graphs(2, 200, 40, 10.0, 5, nullptr), cfg);
    EXPECT_TRUE(r.converged);
    const auto &last = r.history.back();
    EXPECT_LT(last.res_qa / std::sqrt(40.0 * 8 * 2), cfg.tol);
    EXPECT_LT(last.res_be / std::sqrt(8.0 * 200 * 2), cfg.tol);
    EXPECT_LE(last.iter, cfg.max_iter);
}

TEST(Solve, BitIdenticalForFixedSeed) {
    SolverConfig cfg;
    cfg.bits = 8;
    cfg.seed = 4;
    const auto g = synthetic_graphs(3, 150, 30, 6.0, 2, nullptr);
    const SolveResult a = solve(g, cfg), b = solve(g, cfg);
    EXPECT_EQ(a.codes.per_view, b.codes.per_view);
    EXPECT_EQ(a.codes.fused, b.codes.fused);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        EXPECT_EQ(a.history[i].objective, b.history[i].objective);
        EXPECT_EQ(a.history[i].res_qa, b.history[i].res_qa);
        EXPECT_EQ(a.history[i].res_be, b.history[i].res_be);
        EXPECT_EQ(a.history[i].mu, b.history[i].mu);
    }
}

TEST(Solve, BinaryFeasibilityEveryIteration) {
    std::mt19937_64 rng(16);
    const Problem prob(random_graphs(2, 6, 15, rng));
    SolverConfig cfg;
    cfg.bits = 4;
    SolverState s = init_state(prob, cfg);
    for (int it = 0; it < 40; ++it) {
        update_q(s, prob, cfg);
        update_b(s, prob, cfg);
        for (const auto &b : s.B)
            ASSERT_TRUE((b.array().abs() == 1.0).all());
        update_a(s, cfg);
        update_e(s, cfg);
        update_multipliers(s, cfg);
    }
}

TEST(Solve, RecordsStationarityWhenAsked) {
    SolverConfig cfg;
    cfg.bits = 6;
    cfg.check_stationarity = true;
    const SolveResult r = solve(synthetic_graphs(3, 120, 25, 6.0, 7, nullptr), cfg);
    for (std::size_t i = 1; i < r.history.size(); ++i)
        EXPECT_LE(r.history[i].q_stationarity, 1e-8);
}

TEST(Solve, NonFiniteStateAborts) {
    std::mt19937_64 rng(17);
    SolverConfig cfg;
    cfg.bits = 2;
    cfg.mu0 = 1e308;
    cfg.mu_max = std::numeric_limits<double>::infinity();
    try {
        solve(random_graphs(1, 3, 4, rng), cfg);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), Errc::NonFinite);
        EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos);
    }
}
