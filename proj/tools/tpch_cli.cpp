// Command-line front end: synth, noise, kernelize, cluster, sweep, bench, eval.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <tpch/tpch.hpp>

namespace fs = std::filesystem;
using namespace tpch;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_file(const fs::path &path, const std::string &text) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(Errc::IoError, "cannot write " + path.string());
    out << text;
    if (!out)
        fail(Errc::IoError, "write failed for " + path.string());
}

/// Prints to stdout when path is empty.
void emit(const std::string &path, const std::string &text) {
    if (path.empty())
        std::cout << text;
    else
        write_file(path, text);
}

std::string matrix_csv(const Eigen::MatrixXd &m) {
    std::string text;
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c > 0)
                text += ',';
            text += detail::format_double(m(r, c));
        }
        text += '\n';
    }
    return text;
}

std::string scores_csv_fields(const std::optional<ClusteringScores> &s) {
    if (!s)
        return ",,,,";
    return detail::format_double(s->acc) + ',' + detail::format_double(s->nmi) + ',' +
           detail::format_double(s->purity) + ',' + detail::format_double(s->fscore) + ',' +
           detail::format_double(s->ari);
}

struct ClusterFlags {
    std::string data;
    RunConfig run;
    bool no_standardize = false;
};

void add_cluster_flags(CLI::App *cmd, ClusterFlags &f) {
    cmd->add_option("dataset", f.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--anchors", f.run.anchors, "Anchor count m (0 = min(1000, n))")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--bits", f.run.solver.bits, "Hash length l")->check(CLI::PositiveNumber);
    cmd->add_option("--alpha", f.run.solver.alpha, "Projection-fit weight")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--zeta", f.run.solver.zeta, "TNN weight inside the enhanced norm")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--k", f.run.k, "Cluster count (default: distinct labels)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.run.seed, "Seed for anchors, initialization and restarts");
    cmd->add_option("--max-iter", f.run.solver.max_iter, "Solver iteration cap")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--tol", f.run.solver.tol, "Primal residual tolerance")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--restarts", f.run.restarts, "Clustering restarts")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-standardize", f.no_standardize, "Skip per-feature z-scoring");
}

MultiViewData load_for_cluster(ClusterFlags &f) {
    f.run.standardize = !f.no_standardize;
    MultiViewData data = load_multiview(f.data);
    if (f.run.k == 0 && !data.labels)
        throw UsageError("--k is required for a dataset without labels");
    if (f.run.anchors > data.samples())
        throw UsageError("--anchors " + std::to_string(f.run.anchors) + " exceeds " +
                         std::to_string(data.samples()) + " samples");
    return data;
}

int run(int argc, char **argv) {
    CLI::App app{"Tensor-interacted projection hashing for multi-view clustering"};
    app.require_subcommand(1);

    // synth
    auto *synth = app.add_subcommand("synth", "Write a seeded Gaussian multi-view dataset");
    Index s_k = 4, s_views = 2, s_n = 400;
    std::vector<Index> s_dims;
    double s_sep = 8.0;
    std::uint64_t s_seed = 0;
    std::string s_out, s_name = "synthetic";
    bool s_force = false;
    synth->add_option("--k", s_k, "Clusters")->check(CLI::PositiveNumber);
    synth->add_option("--views", s_views, "Views")->check(CLI::PositiveNumber);
    synth->add_option("--n", s_n, "Samples")->check(CLI::PositiveNumber);
    synth->add_option("--dims", s_dims, "Per-view dimensionality (default 10 each)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    synth->add_option("--sep", s_sep, "Radius of the cluster-mean sphere")
        ->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", s_seed, "Seed");
    synth->add_option("--name", s_name, "Dataset name");
    synth->add_option("--out", s_out, "Output directory")->required();
    synth->add_flag("--force", s_force, "Replace an existing dataset");

    // noise
    auto *noise = app.add_subcommand("noise", "Apply salt-and-pepper noise to every view");
    std::string n_in, n_out;
    double n_ratio = 0.1;
    std::uint64_t n_seed = 0;
    bool n_force = false;
    noise->add_option("--in", n_in, "Input dataset")->required()->check(CLI::ExistingDirectory);
    noise->add_option("--out", n_out, "Output directory")->required();
    noise->add_option("--ratio", n_ratio, "Fraction of corrupted entries")->check(CLI::Range(0.0, 1.0));
    noise->add_option("--seed", n_seed, "Seed (view p uses seed + p)");
    noise->add_flag("--force", n_force, "Replace an existing dataset");

    // kernelize
    auto *kern = app.add_subcommand("kernelize", "Write the anchor graph of every view");
    std::string k_in, k_out;
    Index k_anchors = 0;
    std::uint64_t k_seed = 0;
    bool k_nostd = false;
    kern->add_option("--in", k_in, "Input dataset")->required()->check(CLI::ExistingDirectory);
    kern->add_option("--out", k_out, "Output directory")->required();
    kern->add_option("--anchors", k_anchors, "Anchor count m (0 = min(1000, n))")
        ->check(CLI::NonNegativeNumber);
    kern->add_option("--seed", k_seed, "Anchor seed");
    kern->add_flag("--no-standardize", k_nostd, "Skip per-feature z-scoring");

    // cluster
    auto *cluster = app.add_subcommand("cluster", "Kernelize, hash, cluster and score a dataset");
    ClusterFlags c;
    std::string c_out, c_trace, c_labels, c_codes;
    add_cluster_flags(cluster, c);
    cluster->add_option("--out", c_out, "Report path (default stdout)");
    cluster->add_option("--trace", c_trace, "Per-iteration trace CSV");
    cluster->add_option("--labels-out", c_labels, "Predicted labels, one per line");
    cluster->add_option("--codes", c_codes, "Fused hash codes as an l x n CSV");

    // sweep
    auto *sweep = app.add_subcommand("sweep", "Cluster once per alpha value");
    ClusterFlags w;
    std::vector<double> w_alphas;
    std::string w_out;
    add_cluster_flags(sweep, w);
    sweep->add_option("--alphas", w_alphas, "Alpha grid (default 1e-8 ... 1e2 by decade)")
        ->delimiter(',')
        ->check(CLI::NonNegativeNumber);
    sweep->add_option("--out", w_out, "CSV path (default stdout)");

    // bench
    auto *bench = app.add_subcommand("bench", "Time the solver on synthetic data of growing n");
    std::vector<Index> b_sizes{5000, 10000, 20000};
    BenchConfig b;
    std::string b_out;
    bench->add_option("--sizes", b_sizes, "Sample counts")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    bench->add_option("--anchors", b.anchors, "Anchor count")->check(CLI::PositiveNumber);
    bench->add_option("--bits", b.bits, "Hash length")->check(CLI::PositiveNumber);
    bench->add_option("--iters", b.iterations, "Solver iterations per size")
        ->check(CLI::PositiveNumber);
    bench->add_option("--seed", b.seed, "Seed");
    bench->add_option("--out", b_out, "CSV path (default stdout)");

    // eval
    auto *eval = app.add_subcommand("eval", "Score predicted labels against ground truth");
    std::string e_pred, e_truth, e_out;
    eval->add_option("--pred", e_pred, "Predicted labels file")->required()->check(CLI::ExistingFile);
    eval->add_option("--truth", e_truth, "Ground-truth labels file")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", e_out, "Report path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (*synth) {
        if (s_dims.empty())
            s_dims.assign(static_cast<std::size_t>(s_views), 10);
        if (static_cast<Index>(s_dims.size()) != s_views)
            throw UsageError("--dims needs one value per view");
        if (s_n < s_k)
            throw UsageError("--n must be at least --k");
        MultiViewData d = gen_synthetic_gaussian(s_k, s_views, s_n, s_dims, s_sep, s_seed);
        d.name = s_name;
        save_multiview(d, s_out, s_force);
    } else if (*noise) {
        MultiViewData d = salt_pepper(load_multiview(n_in), n_ratio, n_seed);
        save_multiview(d, n_out, n_force);
    } else if (*kern) {
        const MultiViewData d = load_multiview(k_in);
        KernelOptions opt;
        opt.anchors = k_anchors;
        opt.seed = k_seed;
        opt.standardize = !k_nostd;
        const KernelizedViews kv = kernelize_views(d.views, opt);
        nlohmann::ordered_json meta;
        meta["anchors"] = kv.anchor_indices;
        meta["bandwidths"] = kv.bandwidths;
        for (std::size_t p = 0; p < kv.graphs.size(); ++p)
            write_file(fs::path(k_out) / ("graph_" + std::to_string(p + 1) + ".csv"),
                       matrix_csv(kv.graphs[p].values));
        write_file(fs::path(k_out) / "kernel.json", meta.dump(2) + "\n");
    } else if (*cluster) {
        const MultiViewData d = load_for_cluster(c);
        const RunReport r = run_cluster(d, c.run);
        if (!c_trace.empty())
            write_file(c_trace, trace_csv(r.history));
        if (!c_labels.empty()) {
            std::string text;
            for (Index x : r.labels)
                text += std::to_string(x) + '\n';
            write_file(c_labels, text);
        }
        if (!c_codes.empty())
            write_file(c_codes, matrix_csv(r.codes));
        emit(c_out, report_json(r).dump(2) + "\n");
    } else if (*sweep) {
        const MultiViewData d = load_for_cluster(w);
        if (w_alphas.empty())
            for (int e = -8; e <= 2; ++e)
                w_alphas.push_back(std::pow(10.0, e));
        std::string csv = "alpha,acc,nmi,purity,fscore,ari,iterations,status\n";
        bool failed = false;
        for (double a : w_alphas) {
            RunConfig cfg = w.run;
            cfg.solver.alpha = a;
            try {
                const RunReport r = run_cluster(d, cfg);
                csv += detail::format_double(a) + ',' + scores_csv_fields(r.scores) + ',' +
                       std::to_string(r.iterations) + ",ok\n";
            } catch (const std::exception &e) {
                failed = true;
                std::cerr << "alpha " << a << ": " << e.what() << "\n";
                csv += detail::format_double(a) + ",,,,,,,failed\n";
            }
        }
        emit(w_out, csv);
        return failed ? 1 : 0;
    } else if (*bench) {
        std::string csv = "n,seconds,iterations,seconds_per_iter\n";
        for (Index n : b_sizes) {
            if (n < b.anchors)
                throw UsageError("size " + std::to_string(n) + " is below --anchors");
            const BenchRow row = bench_solve(n, b);
            csv += std::to_string(row.n) + ',' + detail::format_double(row.seconds) + ',' +
                   std::to_string(row.iterations) + ',' +
                   detail::format_double(row.seconds_per_iter) + '\n';
        }
        emit(b_out, csv);
    } else if (*eval) {
        const auto pred = detail::read_labels(e_pred);
        const auto truth = detail::read_labels(e_truth);
        const ClusteringScores s = evaluate(pred, truth);
        nlohmann::ordered_json j;
        j["acc"] = s.acc;
        j["nmi"] = s.nmi;
        j["purity"] = s.purity;
        j["fscore"] = s.fscore;
        j["ari"] = s.ari;
        emit(e_out, j.dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
