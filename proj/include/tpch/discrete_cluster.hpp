#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tpch/error.hpp"

namespace tpch {

using Index = Eigen::Index;

/// Binary centroids plus a hard assignment of every sample to one of them.
struct ClusterModel {
    Eigen::MatrixXd C;               ///< l x k, entries in {-1, +1}
    std::vector<Index> assignment;   ///< cluster of each sample
    int iterations = 0;
    std::vector<double> objective_trace;  ///< ||B - C G||_F^2 after each assignment step

    Index clusters() const noexcept { return C.cols(); }

    /// k x n one-hot indicator G.
    Eigen::MatrixXi indicator() const {
        Eigen::MatrixXi G = Eigen::MatrixXi::Zero(C.cols(), static_cast<Index>(assignment.size()));
        for (std::size_t i = 0; i < assignment.size(); ++i)
            G(assignment[i], static_cast<Index>(i)) = 1;
        return G;
    }
};

/// Number of disagreeing positions between two sign vectors.
template <class A, class B>
Index hamming(const Eigen::MatrixBase<A> &b, const Eigen::MatrixBase<B> &c) {
    require(b.size() == c.size(), Errc::LengthMismatch,
            "hamming of lengths " + std::to_string(b.size()) + " and " + std::to_string(c.size()));
    Index d = 0;
    for (Index i = 0; i < b.size(); ++i)
        d += (b(i) < 0.0) != (c(i) < 0.0);
    return d;
}

/// Nearest centroid in Hamming distance, ties to the lowest centroid index.
/// Uses H(b, c) = (l - b^T c) / 2, exact for sign vectors.
inline std::vector<Index> g_step(const Eigen::MatrixXd &codes, const Eigen::MatrixXd &C) {
    require(codes.rows() == C.rows(), Errc::LengthMismatch, "code and centroid lengths differ");
    const Eigen::MatrixXd agreement = C.transpose() * codes;  // k x n
    std::vector<Index> out(static_cast<std::size_t>(codes.cols()));
    for (Index i = 0; i < codes.cols(); ++i) {
        Index best = 0;
        for (Index j = 1; j < C.cols(); ++j)
            if (agreement(j, i) > agreement(best, i))
                best = j;
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

/// Per-cluster bitwise majority (ties to +1). Empty clusters are reseeded, in index order,
/// with the not yet used sample farthest from its own centroid.
inline Eigen::MatrixXd c_step(const Eigen::MatrixXd &codes, const std::vector<Index> &assignment,
                              Index k) {
    require(static_cast<Index>(assignment.size()) == codes.cols(), Errc::LengthMismatch,
            "assignment length differs from sample count");
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(codes.rows(), k);
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < codes.cols(); ++i) {
        const Index g = assignment[static_cast<std::size_t>(i)];
        require(g >= 0 && g < k, Errc::InvalidK, "assignment refers to a missing cluster");
        sums.col(g) += codes.col(i);
        ++counts[static_cast<std::size_t>(g)];
    }
    Eigen::MatrixXd C = sums.unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });

    std::vector<bool> used(static_cast<std::size_t>(codes.cols()), false);
    for (Index j = 0; j < k; ++j) {
        if (counts[static_cast<std::size_t>(j)] > 0)
            continue;
        Index far = -1, far_dist = -1;
        for (Index i = 0; i < codes.cols(); ++i) {
            if (used[static_cast<std::size_t>(i)])
                continue;
            const Index d = hamming(codes.col(i), C.col(assignment[static_cast<std::size_t>(i)]));
            if (d > far_dist) {
                far = i;
                far_dist = d;
            }
        }
        if (far < 0)
            break;
        used[static_cast<std::size_t>(far)] = true;
        C.col(j) = codes.col(far);
    }
    return C;
}

/// ||B - C G||_F^2, i.e. four times the summed Hamming distance to assigned centroids.
inline double quantization_error(const Eigen::MatrixXd &codes, const Eigen::MatrixXd &C,
                                 const std::vector<Index> &assignment) {
    double total = 0.0;
    for (Index i = 0; i < codes.cols(); ++i)
        total += (codes.col(i) - C.col(assignment[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

/// Alternating binary k-means on sign codes (l x n).
inline ClusterModel dplm_cluster(const Eigen::MatrixXd &codes, Index k, int max_iter,
                                 std::uint64_t seed) {
    const Index n = codes.cols();
    require(k >= 1 && k <= n, Errc::InvalidK,
            "k = " + std::to_string(k) + " with " + std::to_string(n) + " samples");

    // Seeded visiting order; the first k distinct codes become centroids, and duplicates
    // only fill in when fewer than k distinct codes exist.
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Index> picks;
    for (Index i : order) {
        if (static_cast<Index>(picks.size()) == k)
            break;
        const bool dup = std::any_of(picks.begin(), picks.end(), [&](Index p) {
            return codes.col(p) == codes.col(i);
        });
        if (!dup)
            picks.push_back(i);
    }
    for (Index i : order) {
        if (static_cast<Index>(picks.size()) == k)
            break;
        if (std::find(picks.begin(), picks.end(), i) == picks.end())
            picks.push_back(i);
    }

    ClusterModel model;
    model.C.resize(codes.rows(), k);
    for (Index j = 0; j < k; ++j)
        model.C.col(j) = codes.col(picks[static_cast<std::size_t>(j)]);
    model.assignment = g_step(codes, model.C);
    model.objective_trace.push_back(quantization_error(codes, model.C, model.assignment));

    for (int it = 0; it < max_iter; ++it) {
        model.C = c_step(codes, model.assignment, k);
        auto next = g_step(codes, model.C);
        model.iterations = it + 1;
        const bool stable = next == model.assignment;
        model.assignment = std::move(next);
        model.objective_trace.push_back(quantization_error(codes, model.C, model.assignment));
        if (stable)
            break;
    }
    return model;
}

/// Runs dplm_cluster from seeds seed, seed + 1, ... and keeps the model with the lowest
/// final quantization error (earliest restart on ties).
inline ClusterModel dplm_cluster_best(const Eigen::MatrixXd &codes, Index k, int max_iter,
                                      std::uint64_t seed, int restarts) {
    require(restarts >= 1, Errc::InvalidArgs, "restarts must be >= 1");
    ClusterModel best = dplm_cluster(codes, k, max_iter, seed);
    for (int r = 1; r < restarts; ++r) {
        ClusterModel next = dplm_cluster(codes, k, max_iter, seed + static_cast<std::uint64_t>(r));
        if (next.objective_trace.back() < best.objective_trace.back())
            best = std::move(next);
    }
    return best;
}

inline std::vector<Index> labels(const ClusterModel &model) { return model.assignment; }

} // namespace tpch
