#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tpch/error.hpp"

namespace tpch {

using Index = Eigen::Index;

/// Raw features of one view: d_p x n, one column per sample.
using ViewMatrix = Eigen::MatrixXd;

struct AnchorSet {
    Eigen::MatrixXd anchors;            ///< d_p x m, columns are anchor samples
    std::vector<Index> source_indices;  ///< sample index of each anchor column
};

/// Anchor-to-sample RBF similarities, m x n.
struct BipartiteGraph {
    Eigen::MatrixXd values;

    Index anchors() const noexcept { return values.rows(); }
    Index samples() const noexcept { return values.cols(); }
};

/// m distinct indices in [0, n) drawn by a seeded partial Fisher-Yates shuffle.
inline std::vector<Index> sample_anchor_indices(Index n, Index m, std::uint64_t seed) {
    require(m >= 1 && m <= n, Errc::AnchorCountExceedsSamples,
            "requested " + std::to_string(m) + " anchors from " + std::to_string(n) + " samples");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    for (Index i = 0; i < m; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    perm.resize(static_cast<std::size_t>(m));
    return perm;
}

inline AnchorSet anchors_at(const ViewMatrix &view, std::span<const Index> indices) {
    AnchorSet a;
    a.anchors.resize(view.rows(), static_cast<Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j) {
        require(indices[j] >= 0 && indices[j] < view.cols(), Errc::InvalidArgs,
                "anchor index out of range");
        a.anchors.col(static_cast<Index>(j)) = view.col(indices[j]);
    }
    a.source_indices.assign(indices.begin(), indices.end());
    return a;
}

/// Same seed gives the same sample indices for every view of a dataset.
inline AnchorSet sample_anchors(const ViewMatrix &view, Index m, std::uint64_t seed) {
    const auto idx = sample_anchor_indices(view.cols(), m, seed);
    return anchors_at(view, idx);
}

/// Mean squared sample-to-anchor distance; 1 when every sample equals every anchor.
inline double estimate_bandwidth(const ViewMatrix &view, const AnchorSet &anchors) {
    const auto &S = anchors.anchors;
    require(view.cols() >= 1 && S.cols() >= 1, Errc::Empty, "empty view or anchor set");
    require(view.rows() == S.rows(), Errc::DimensionMismatch,
            "anchor dimensionality differs from view");

    const Eigen::VectorXd ref = S.col(0);
    const bool degenerate = ((view.colwise() - ref).cwiseAbs().maxCoeff() == 0.0) &&
                            ((S.colwise() - ref).cwiseAbs().maxCoeff() == 0.0);
    if (degenerate)
        return 1.0;

    // mean ||x - s||^2 = mean ||x||^2 + mean ||s||^2 - 2 <mean x, mean s>
    const double n = static_cast<double>(view.cols()), m = static_cast<double>(S.cols());
    const double mean = view.colwise().squaredNorm().sum() / n +
                        S.colwise().squaredNorm().sum() / m -
                        2.0 * (view.rowwise().sum() / n).dot(S.rowwise().sum() / m);
    return mean > 0.0 ? mean : std::numeric_limits<double>::min();
}

/// Entry (j, i) = exp(-||x_i - s_j||^2 / delta), floored at the smallest normal double so
/// every similarity stays strictly positive.
inline BipartiteGraph kernelize(const ViewMatrix &view, const AnchorSet &anchors, double delta) {
    require(delta > 0.0 && std::isfinite(delta), Errc::NonPositiveBandwidth,
            "bandwidth must be positive, got " + std::to_string(delta));
    const auto &S = anchors.anchors;
    require(view.rows() == S.rows(), Errc::DimensionMismatch,
            "anchor dimensionality differs from view");
    constexpr double floor = std::numeric_limits<double>::min();
    BipartiteGraph g{Eigen::MatrixXd(S.cols(), view.cols())};
    for (Index i = 0; i < view.cols(); ++i)
        for (Index j = 0; j < S.cols(); ++j)
            g.values(j, i) = std::max(std::exp(-(view.col(i) - S.col(j)).squaredNorm() / delta),
                                      floor);
    return g;
}

/// Per-feature z-scoring (population deviation); constant features become zero.
inline ViewMatrix standardize(const ViewMatrix &view) {
    ViewMatrix out = view;
    const double n = static_cast<double>(view.cols());
    for (Index r = 0; r < view.rows(); ++r) {
        const double mean = view.row(r).sum() / n;
        const double var = (view.row(r).array() - mean).square().sum() / n;
        const double sd = std::sqrt(var);
        if (sd > 0.0)
            out.row(r) = (view.row(r).array() - mean) / sd;
        else
            out.row(r).setZero();
    }
    return out;
}

struct KernelOptions {
    Index anchors = 0;            ///< 0 selects min(1000, n)
    std::uint64_t seed = 0;
    bool standardize = true;
    std::vector<double> bandwidths;  ///< per view; empty means estimate
};

struct KernelizedViews {
    std::vector<BipartiteGraph> graphs;
    std::vector<double> bandwidths;
    std::vector<Index> anchor_indices;
};

/// Kernelizes every view against anchors at one shared set of sample indices.
inline KernelizedViews kernelize_views(std::span<const ViewMatrix> views,
                                       const KernelOptions &opt) {
    require(!views.empty(), Errc::Empty, "no views");
    const Index n = views.front().cols();
    for (const auto &v : views)
        require(v.cols() == n, Errc::InconsistentSampleCounts, "views disagree on sample count");
    require(opt.bandwidths.empty() || opt.bandwidths.size() == views.size(), Errc::InvalidArgs,
            "one bandwidth per view expected");

    KernelizedViews out;
    const Index m = opt.anchors > 0 ? opt.anchors : std::min<Index>(1000, n);
    out.anchor_indices = sample_anchor_indices(n, m, opt.seed);
    for (std::size_t p = 0; p < views.size(); ++p) {
        const ViewMatrix x = opt.standardize ? standardize(views[p]) : views[p];
        const AnchorSet a = anchors_at(x, out.anchor_indices);
        const double delta = opt.bandwidths.empty() ? estimate_bandwidth(x, a) : opt.bandwidths[p];
        out.graphs.push_back(kernelize(x, a, delta));
        out.bandwidths.push_back(delta);
    }
    return out;
}

} // namespace tpch
