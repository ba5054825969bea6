#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpch/datasets.hpp"
#include "tpch/discrete_cluster.hpp"
#include "tpch/kernelizer.hpp"
#include "tpch/metrics.hpp"
#include "tpch/solver.hpp"

namespace tpch {

/// Everything one end-to-end run depends on. A single seed drives anchor sampling, the
/// solver initialization and the clustering restarts.
struct RunConfig {
    Index anchors = 0;  ///< 0 selects min(1000, n)
    Index k = 0;        ///< 0 takes the number of distinct ground-truth labels
    std::uint64_t seed = 0;
    bool standardize = true;
    SolverConfig solver;
    int cluster_iter = 100;
    int restarts = 10;
};

struct PhaseSeconds {
    double kernelize = 0.0, solve = 0.0, cluster = 0.0;
};

struct RunReport {
    std::string dataset;
    RunConfig config;
    Index anchors = 0, k = 0;
    std::optional<ClusteringScores> scores;
    std::vector<Index> labels;
    SignMatrix codes;  ///< fused l x n hash codes
    std::vector<IterationRecord> history;
    bool converged = false;
    int iterations = 0;
    double res_qa = 0.0, res_be = 0.0;
    PhaseSeconds seconds;
};

inline Index count_distinct(const std::vector<Index> &labels) {
    return static_cast<Index>(std::set<Index>(labels.begin(), labels.end()).size());
}

/// kernelize -> solve -> cluster -> score (when labels exist).
inline RunReport run_cluster(const MultiViewData &data, const RunConfig &cfg) {
    using clock = std::chrono::steady_clock;
    const auto seconds_since = [](clock::time_point t) {
        return std::chrono::duration<double>(clock::now() - t).count();
    };
    require(!data.views.empty(), Errc::Empty, "dataset has no views");

    RunReport rep;
    rep.dataset = data.name;
    rep.config = cfg;
    rep.config.solver.seed = cfg.seed;
    const Index n = data.views.front().cols();
    rep.anchors = cfg.anchors > 0 ? cfg.anchors : std::min<Index>(1000, n);
    if (cfg.k > 0)
        rep.k = cfg.k;
    else if (data.labels)
        rep.k = count_distinct(*data.labels);
    require(rep.k >= 1, Errc::InvalidK, "cluster count not given and no labels to infer it from");

    auto t = clock::now();
    KernelOptions kopt;
    kopt.anchors = rep.anchors;
    kopt.seed = cfg.seed;
    kopt.standardize = cfg.standardize;
    KernelizedViews kern = kernelize_views(data.views, kopt);
    rep.seconds.kernelize = seconds_since(t);

    t = clock::now();
    SolveResult sol = solve(std::move(kern.graphs), rep.config.solver);
    rep.seconds.solve = seconds_since(t);

    t = clock::now();
    const ClusterModel model =
        dplm_cluster_best(sol.codes.fused, rep.k, cfg.cluster_iter, cfg.seed, cfg.restarts);
    rep.seconds.cluster = seconds_since(t);

    rep.labels = labels(model);
    if (data.labels)
        rep.scores = evaluate(rep.labels, *data.labels);
    rep.converged = sol.converged;
    rep.iterations = sol.history.back().iter;
    rep.res_qa = sol.history.back().res_qa;
    rep.res_be = sol.history.back().res_be;
    rep.history = std::move(sol.history);
    rep.codes = std::move(sol.codes.fused);
    return rep;
}

/// Flat key/value report. Keys ending in "_seconds" are the only non-deterministic ones.
inline nlohmann::ordered_json report_json(const RunReport &r) {
    nlohmann::ordered_json j;
    const SolverConfig &s = r.config.solver;
    j["dataset"] = r.dataset;
    j["alpha"] = s.alpha;
    j["bits"] = s.bits;
    j["anchors"] = r.anchors;
    j["zeta"] = s.zeta;
    j["seed"] = r.config.seed;
    j["k"] = r.k;
    j["standardize"] = r.config.standardize;
    j["mu0"] = s.mu0;
    j["rho"] = s.rho;
    j["mu_max"] = s.mu_max;
    j["max_iter"] = s.max_iter;
    j["tol"] = s.tol;
    j["restarts"] = r.config.restarts;
    j["cluster_iter"] = r.config.cluster_iter;
    if (r.scores) {
        j["acc"] = r.scores->acc;
        j["nmi"] = r.scores->nmi;
        j["purity"] = r.scores->purity;
        j["fscore"] = r.scores->fscore;
        j["ari"] = r.scores->ari;
    }
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["res_qa"] = r.res_qa;
    j["res_be"] = r.res_be;
    j["kernelize_seconds"] = r.seconds.kernelize;
    j["solve_seconds"] = r.seconds.solve;
    j["cluster_seconds"] = r.seconds.cluster;
    return j;
}

/// CSV with columns iter,objective,res_qa,res_be,mu,seconds; row 0 is the initial state.
inline std::string trace_csv(const std::vector<IterationRecord> &history) {
    std::string out = "iter,objective,res_qa,res_be,mu,seconds\n";
    for (const auto &h : history)
        out += std::to_string(h.iter) + ',' + detail::format_double(h.objective) + ',' +
               detail::format_double(h.res_qa) + ',' + detail::format_double(h.res_be) + ',' +
               detail::format_double(h.mu) + ',' + detail::format_double(h.seconds) + '\n';
    return out;
}

struct BenchRow {
    Index n = 0;
    double seconds = 0.0;
    int iterations = 0;
    double seconds_per_iter = 0.0;
};

struct BenchConfig {
    Index anchors = 500;
    Index bits = 32;
    int iterations = 10;  ///< every size runs exactly this many solver iterations
    Index k = 4, views = 2, dim = 10;
    double sep = 8.0;
    std::uint64_t seed = 0;
};

/// Times the solve phase (graph preprocessing included) on a synthetic dataset of n samples.
inline BenchRow bench_solve(Index n, const BenchConfig &cfg) {
    const MultiViewData data = gen_synthetic_gaussian(
        cfg.k, cfg.views, n, std::vector<Index>(static_cast<std::size_t>(cfg.views), cfg.dim),
        cfg.sep, cfg.seed);
    KernelOptions kopt;
    kopt.anchors = cfg.anchors;
    kopt.seed = cfg.seed;
    KernelizedViews kern = kernelize_views(data.views, kopt);

    SolverConfig s;
    s.bits = cfg.bits;
    s.seed = cfg.seed;
    s.max_iter = cfg.iterations;
    s.tol = 0.0;
    const auto t = std::chrono::steady_clock::now();
    const SolveResult res = solve(std::move(kern.graphs), s);
    BenchRow row;
    row.n = n;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
    row.iterations = res.history.back().iter;
    row.seconds_per_iter = row.iterations > 0 ? row.seconds / row.iterations : 0.0;
    return row;
}

} // namespace tpch
