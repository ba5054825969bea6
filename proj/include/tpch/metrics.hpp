#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tpch/error.hpp"

namespace tpch {

using Index = Eigen::Index;

/// Co-occurrence counts: rows are predicted clusters, columns true classes.
struct Contingency {
    Eigen::MatrixXd counts;
    double n = 0.0;

    Eigen::VectorXd row_sums() const { return counts.rowwise().sum(); }
    Eigen::VectorXd col_sums() const { return counts.colwise().sum().transpose(); }
};

namespace detail {

inline std::vector<Index> dense_ids(std::span<const Index> labels, Index &count) {
    std::map<Index, Index> ids;
    for (Index v : labels)
        ids.emplace(v, 0);
    Index next = 0;
    for (auto &[label, id] : ids)
        id = next++;
    count = next;
    std::vector<Index> out;
    out.reserve(labels.size());
    for (Index v : labels)
        out.push_back(ids.at(v));
    return out;
}

inline void check_labels(std::span<const Index> pred, std::span<const Index> truth) {
    require(pred.size() == truth.size(), Errc::LengthMismatch,
            "label vectors of length " + std::to_string(pred.size()) + " and " +
                std::to_string(truth.size()));
    require(!pred.empty(), Errc::Empty, "empty label vectors");
}

inline double pairs(double x) { return x * (x - 1.0) / 2.0; }

/// Minimum-cost assignment of rows to distinct columns (rows <= cols), Hungarian method
/// with potentials. Returns the column assigned to each row.
inline std::vector<Index> hungarian(const Eigen::MatrixXd &cost) {
    const Index rows = cost.rows(), cols = cost.cols();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(rows + 1), 0.0),
        v(static_cast<std::size_t>(cols + 1), 0.0);
    std::vector<Index> match(static_cast<std::size_t>(cols + 1), 0),
        way(static_cast<std::size_t>(cols + 1), 0);
    for (Index i = 1; i <= rows; ++i) {
        match[0] = i;
        Index j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(cols + 1), inf);
        std::vector<bool> used(static_cast<std::size_t>(cols + 1), false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const Index i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= cols; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (used[js])
                    continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[js];
                if (cur < minv[js]) {
                    minv[js] = cur;
                    way[js] = j0;
                }
                if (minv[js] < delta) {
                    delta = minv[js];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= cols; ++j) {
                const auto js = static_cast<std::size_t>(j);
                if (used[js]) {
                    u[static_cast<std::size_t>(match[js])] += delta;
                    v[js] -= delta;
                } else {
                    minv[js] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const Index j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Index> row_to_col(static_cast<std::size_t>(rows), -1);
    for (Index j = 1; j <= cols; ++j)
        if (match[static_cast<std::size_t>(j)] > 0)
            row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

/// Same partition up to relabelling.
inline bool same_partition(const Contingency &c) {
    for (Index r = 0; r < c.counts.rows(); ++r)
        if ((c.counts.row(r).array() > 0).count() != 1)
            return false;
    for (Index j = 0; j < c.counts.cols(); ++j)
        if ((c.counts.col(j).array() > 0).count() != 1)
            return false;
    return true;
}

} // namespace detail

inline Contingency contingency(std::span<const Index> pred, std::span<const Index> truth) {
    detail::check_labels(pred, truth);
    Index kp = 0, kt = 0;
    const auto p = detail::dense_ids(pred, kp);
    const auto t = detail::dense_ids(truth, kt);
    Contingency c{Eigen::MatrixXd::Zero(kp, kt), static_cast<double>(pred.size())};
    for (std::size_t i = 0; i < p.size(); ++i)
        c.counts(p[i], t[i]) += 1.0;
    return c;
}

/// Best matched fraction over one-to-one cluster-to-class maps (exact assignment).
inline double accuracy(std::span<const Index> pred, std::span<const Index> truth) {
    const Contingency c = contingency(pred, truth);
    const Index size = std::max(c.counts.rows(), c.counts.cols());
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(size, size);
    cost.topLeftCorner(c.counts.rows(), c.counts.cols()) = -c.counts;
    const auto match = detail::hungarian(cost);
    double hit = 0.0;
    for (Index r = 0; r < c.counts.rows(); ++r) {
        const Index col = match[static_cast<std::size_t>(r)];
        if (col < c.counts.cols())
            hit += c.counts(r, col);
    }
    return hit / c.n;
}

/// Mutual information over the geometric mean of the entropies (natural log).
/// Zero-entropy cases give 1 for identical partitions and 0 otherwise.
inline double nmi(std::span<const Index> pred, std::span<const Index> truth) {
    const Contingency c = contingency(pred, truth);
    const Eigen::VectorXd a = c.row_sums(), b = c.col_sums();
    const auto entropy = [&](const Eigen::VectorXd &s) {
        double h = 0.0;
        for (Index i = 0; i < s.size(); ++i)
            if (s(i) > 0.0)
                h -= s(i) / c.n * std::log(s(i) / c.n);
        return h;
    };
    const double hp = entropy(a), ht = entropy(b);
    if (hp <= 0.0 || ht <= 0.0)
        return detail::same_partition(c) ? 1.0 : 0.0;
    double mi = 0.0;
    for (Index i = 0; i < c.counts.rows(); ++i)
        for (Index j = 0; j < c.counts.cols(); ++j) {
            const double nij = c.counts(i, j);
            if (nij > 0.0)
                mi += nij / c.n * std::log(c.n * nij / (a(i) * b(j)));
        }
    return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

inline double purity(std::span<const Index> pred, std::span<const Index> truth) {
    const Contingency c = contingency(pred, truth);
    return c.counts.rowwise().maxCoeff().sum() / c.n;
}

/// Pair-counting F1 over same-cluster pairs.
inline double f_score(std::span<const Index> pred, std::span<const Index> truth) {
    const Contingency c = contingency(pred, truth);
    double tp = 0.0, same_pred = 0.0, same_true = 0.0;
    for (Index i = 0; i < c.counts.size(); ++i)
        tp += detail::pairs(c.counts.data()[i]);
    for (double x : c.row_sums())
        same_pred += detail::pairs(x);
    for (double x : c.col_sums())
        same_true += detail::pairs(x);
    const double fp = same_pred - tp, fn = same_true - tp;
    if (tp == 0.0)
        return (fp == 0.0 && fn == 0.0) ? 1.0 : 0.0;
    return 2.0 * tp / (2.0 * tp + fp + fn);
}

/// Adjusted Rand index; degenerate cases (no room above chance) give 1 for identical
/// partitions and 0 otherwise.
inline double ari(std::span<const Index> pred, std::span<const Index> truth) {
    const Contingency c = contingency(pred, truth);
    double index = 0.0, sp = 0.0, st = 0.0;
    for (Index i = 0; i < c.counts.size(); ++i)
        index += detail::pairs(c.counts.data()[i]);
    for (double x : c.row_sums())
        sp += detail::pairs(x);
    for (double x : c.col_sums())
        st += detail::pairs(x);
    const double total = detail::pairs(c.n);
    if (total == 0.0)
        return 1.0;
    const double expected = sp * st / total;
    const double max_index = 0.5 * (sp + st);
    if (max_index == expected)
        return detail::same_partition(c) ? 1.0 : 0.0;
    return (index - expected) / (max_index - expected);
}

struct ClusteringScores {
    double acc = 0.0, nmi = 0.0, purity = 0.0, fscore = 0.0, ari = 0.0;
};

inline ClusteringScores evaluate(std::span<const Index> pred, std::span<const Index> truth) {
    return {accuracy(pred, truth), nmi(pred, truth), purity(pred, truth), f_score(pred, truth),
            ari(pred, truth)};
}

} // namespace tpch
