#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "tpch/error.hpp"
#include "tpch/kernelizer.hpp"
#include "tpch/tensor3.hpp"
#include "tpch/tsvd.hpp"

namespace tpch {

/// Sign matrix with entries in {-1, +1}, stored as doubles for arithmetic.
using SignMatrix = Eigen::MatrixXd;

/// Preprocessing of the anchor graphs before solving: unit column sums, then removal of
/// each anchor row's mean.
struct GraphConditioning {
    bool normalize = true;
    bool center = true;
};

struct SolverConfig {
    double alpha = 0.1;     ///< weight of the projection-fit term
    Index bits = 64;        ///< hash length l
    double zeta = 0.1;      ///< weight of the tnn term inside the enhanced norm
    double mu0 = 1e-4;      ///< initial penalty
    double rho = 2.0;       ///< penalty growth per iteration
    double mu_max = 1e10;
    int max_iter = 100;
    double tol = 1e-6;      ///< on the per-element RMS of the primal residuals
    std::uint64_t seed = 0;
    /// Record the relative residual of the Q-step normal equations in the history.
    bool check_stationarity = false;
    /// Start every view from the same random projection instead of one draw per view.
    bool shared_init = true;
    GraphConditioning conditioning;

    void validate() const {
        require(alpha >= 0.0 && std::isfinite(alpha), Errc::InvalidArgs, "alpha must be >= 0");
        require(bits >= 1, Errc::InvalidArgs, "bits must be >= 1");
        require(zeta >= 0.0, Errc::InvalidArgs, "zeta must be >= 0");
        require(mu0 > 0.0, Errc::InvalidArgs, "mu0 must be > 0");
        require(rho > 1.0, Errc::InvalidArgs, "rho must be > 1");
        require(mu_max >= mu0, Errc::InvalidArgs, "mu_max must be >= mu0");
        require(max_iter >= 0, Errc::InvalidArgs, "max_iter must be >= 0");
        require(tol >= 0.0, Errc::InvalidArgs, "tol must be >= 0");
    }
};

struct IterationRecord {
    int iter = 0;
    double objective = 0.0;
    double res_qa = 0.0;   ///< ||stack(Q) - A||_F
    double res_be = 0.0;   ///< ||stack(B) - E||_F
    double mu = 0.0;       ///< penalty used during this iteration
    double seconds = 0.0;  ///< elapsed since solve() started
    double q_stationarity = 0.0;  ///< only filled when check_stationarity is set
};

struct SolverState {
    std::vector<Eigen::MatrixXd> Q;  ///< m x l per view
    std::vector<SignMatrix> B;       ///< l x n per view
    Tensor3 A, E, Y, J;
    double mu = 0.0;
    int iter = 0;
    std::vector<IterationRecord> history;
};

struct HashCodes {
    std::vector<SignMatrix> per_view;
    SignMatrix fused;
};

struct SolveResult {
    HashCodes codes;
    std::vector<IterationRecord> history;
    bool converged = false;
};

/// Column normalization to unit sum (all-zero columns are left alone), then row centering.
inline Eigen::MatrixXd condition_graph(const Eigen::MatrixXd &phi, const GraphConditioning &c) {
    Eigen::MatrixXd out = phi;
    if (c.normalize)
        for (Index i = 0; i < out.cols(); ++i) {
            const double sum = out.col(i).sum();
            if (sum != 0.0)
                out.col(i) /= sum;
        }
    if (c.center) {
        const Eigen::VectorXd mean = out.rowwise().mean();
        out.colwise() -= mean;
    }
    return out;
}

/// Conditioned graphs plus the eigendecomposition of each Gram matrix phi phi^T, computed
/// once so that every Q-step is a diagonal solve whatever the current penalty.
struct Problem {
    std::vector<BipartiteGraph> graphs;  ///< after conditioning; these are the phi of every step
    std::vector<Eigen::MatrixXd> gram;
    std::vector<Eigen::MatrixXd> gram_vectors;
    std::vector<Eigen::VectorXd> gram_values;

    explicit Problem(std::vector<BipartiteGraph> g, const GraphConditioning &c = {})
        : graphs(std::move(g)) {
        require(!graphs.empty(), Errc::InconsistentSampleCounts, "no graphs");
        const Index n = graphs.front().samples(), m = graphs.front().anchors();
        for (const auto &x : graphs)
            require(x.samples() == n && x.anchors() == m, Errc::InconsistentSampleCounts,
                    "graphs disagree on shape");
        for (auto &x : graphs)
            x.values = condition_graph(x.values, c);
        for (const auto &x : graphs) {
            Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
            G.selfadjointView<Eigen::Lower>().rankUpdate(x.values);
            G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
            require(eig.info() == Eigen::Success, Errc::SingularSystem,
                    "gram eigendecomposition failed");
            gram_values.push_back(eig.eigenvalues().cwiseMax(0.0));
            gram_vectors.push_back(eig.eigenvectors());
            gram.push_back(std::move(G));
        }
    }

    Index views() const { return static_cast<Index>(graphs.size()); }
    Index anchors() const { return graphs.front().anchors(); }
    Index samples() const { return graphs.front().samples(); }
};

/// Elementwise sign with sgn(0) = +1.
template <class Derived> SignMatrix sign_of(const Eigen::MatrixBase<Derived> &m) {
    return m.unaryExpr([](double x) { return x < 0.0 ? -1.0 : 1.0; });
}

inline SolverState init_state(const Problem &prob, const SolverConfig &cfg) {
    cfg.validate();
    const Index m = prob.anchors(), l = cfg.bits;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));

    SolverState s;
    Eigen::MatrixXd q(m, l);
    for (std::size_t p = 0; p < prob.graphs.size(); ++p) {
        if (p == 0 || !cfg.shared_init)
            for (Index c = 0; c < l; ++c)
                for (Index r = 0; r < m; ++r)
                    q(r, c) = normal(rng) * scale;
        s.B.push_back(sign_of(q.transpose() * prob.graphs[p].values));
        s.Q.push_back(q);
    }
    s.A = Tensor3::stack(s.Q);
    s.E = Tensor3::stack(s.B);
    s.Y = Tensor3(s.A.rows(), s.A.cols(), s.A.depth());
    s.J = Tensor3(s.E.rows(), s.E.cols(), s.E.depth());
    s.mu = cfg.mu0;
    return s;
}

/// Solves (2 alpha phi phi^T + mu I) Q_p = 2 alpha phi B_p^T + mu A_p - Y_p for every view.
inline void update_q(SolverState &s, const Problem &prob, const SolverConfig &cfg) {
    for (Index p = 0; p < prob.views(); ++p) {
        const auto &phi = prob.graphs[static_cast<std::size_t>(p)].values;
        const auto &W = prob.gram_vectors[static_cast<std::size_t>(p)];
        const Eigen::VectorXd denom =
            (2.0 * cfg.alpha * prob.gram_values[static_cast<std::size_t>(p)].array() + s.mu)
                .matrix();
        require((denom.array() > 0.0).all(), Errc::SingularSystem, "Q-step system is singular");
        const Eigen::MatrixXd rhs =
            2.0 * cfg.alpha * (phi * s.B[static_cast<std::size_t>(p)].transpose()) +
            s.mu * s.A.slice(p) - s.Y.slice(p);
        s.Q[static_cast<std::size_t>(p)] =
            W * (denom.cwiseInverse().asDiagonal() * (W.transpose() * rhs));
    }
}

/// Largest normwise relative residual ||M Q - R|| / (||M|| ||Q|| + ||R||) of the Q-step
/// normal equations over all views, evaluated without the cached eigenbasis.
inline double q_stationarity(const SolverState &s, const Problem &prob, const SolverConfig &cfg) {
    double worst = 0.0;
    for (Index p = 0; p < prob.views(); ++p) {
        const std::size_t i = static_cast<std::size_t>(p);
        const auto &phi = prob.graphs[i].values;
        const auto &Q = s.Q[i];
        const Eigen::MatrixXd M =
            2.0 * cfg.alpha * prob.gram[i] +
            s.mu * Eigen::MatrixXd::Identity(prob.anchors(), prob.anchors());
        const Eigen::MatrixXd rhs =
            2.0 * cfg.alpha * (phi * s.B[i].transpose()) + s.mu * s.A.slice(p) - s.Y.slice(p);
        const Eigen::MatrixXd lhs = 2.0 * cfg.alpha * (phi * (phi.transpose() * Q)) + s.mu * Q;
        const double scale = M.norm() * Q.norm() + rhs.norm();
        if (scale > 0.0)
            worst = std::max(worst, (lhs - rhs).norm() / scale);
    }
    return worst;
}

/// B_p = sgn(alpha Q_p^T phi + (mu / 2)(E_p - J_p / mu)).
inline void update_b(SolverState &s, const Problem &prob, const SolverConfig &cfg) {
    for (Index p = 0; p < prob.views(); ++p) {
        const std::size_t i = static_cast<std::size_t>(p);
        s.B[i] = sign_of(cfg.alpha * (s.Q[i].transpose() * prob.graphs[i].values) +
                         0.5 * s.mu * (s.E.slice(p) - s.J.slice(p) / s.mu));
    }
}

inline double lambda_for(Index leading, Index views, Index samples) {
    return 1.0 / std::sqrt(static_cast<double>(std::max(leading, views)) *
                           static_cast<double>(samples));
}

inline void update_a(SolverState &s, const SolverConfig &cfg) {
    const Index n = s.B.front().cols();
    const Tensor3 target = Tensor3::stack(s.Q) + s.Y * (1.0 / s.mu);
    s.A = etnn_prox(target, s.mu, cfg.zeta, lambda_for(s.A.rows(), s.A.depth(), n));
}

inline void update_e(SolverState &s, const SolverConfig &cfg) {
    const Index n = s.B.front().cols();
    const Tensor3 target = Tensor3::stack(s.B) + s.J * (1.0 / s.mu);
    s.E = etnn_prox(target, s.mu, cfg.zeta, lambda_for(s.E.rows(), s.E.depth(), n));
}

inline void update_multipliers(SolverState &s, const SolverConfig &cfg) {
    s.Y += s.mu * (Tensor3::stack(s.Q) - s.A);
    s.J += s.mu * (Tensor3::stack(s.B) - s.E);
    s.mu = std::min(cfg.rho * s.mu, cfg.mu_max);
}

inline double objective(const SolverState &s, const Problem &prob, const SolverConfig &cfg) {
    double fit = 0.0;
    for (Index p = 0; p < prob.views(); ++p) {
        const std::size_t i = static_cast<std::size_t>(p);
        fit += (s.Q[i].transpose() * prob.graphs[i].values - s.B[i]).squaredNorm();
    }
    return cfg.alpha * fit + etnn(Tensor3::stack(s.Q), cfg.zeta) +
           etnn(Tensor3::stack(s.B), cfg.zeta);
}

/// Majority vote across views with ties resolved to +1.
inline SignMatrix fuse_hash(std::span<const SignMatrix> per_view) {
    require(!per_view.empty(), Errc::ShapeMismatch, "no hash matrices to fuse");
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(per_view.front().rows(), per_view.front().cols());
    for (const auto &b : per_view) {
        require(b.rows() == sum.rows() && b.cols() == sum.cols(), Errc::ShapeMismatch,
                "hash matrices differ in shape");
        sum += b;
    }
    return sign_of(sum);
}

namespace detail {

inline void check_finite(const SolverState &s, int iter) {
    bool ok = s.A.all_finite() && s.E.all_finite() && s.Y.all_finite() && s.J.all_finite() &&
              std::isfinite(s.mu);
    for (const auto &q : s.Q)
        ok = ok && q.allFinite();
    if (!ok)
        fail(Errc::NonFinite, "non-finite solver state at iteration " + std::to_string(iter));
}

inline std::pair<double, double> primal_residuals(const SolverState &s) {
    return {(Tensor3::stack(s.Q) - s.A).norm(), (Tensor3::stack(s.B) - s.E).norm()};
}

} // namespace detail

/// Runs the alternating Q, B, A, E and multiplier updates until the per-element RMS of
/// both primal residuals drops below cfg.tol or cfg.max_iter iterations have run.
/// history[0] describes the initial state.
inline SolveResult solve(const Problem &prob, const SolverConfig &cfg) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(clock::now() - start).count();
    };

    SolverState s = init_state(prob, cfg);
    IterationRecord first;
    first.objective = objective(s, prob, cfg);
    first.mu = s.mu;
    first.seconds = elapsed();
    s.history.push_back(first);

    const double q_elems = static_cast<double>(s.A.size());
    const double b_elems = static_cast<double>(s.E.size());
    bool converged = false;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        IterationRecord rec;
        rec.iter = it;
        rec.mu = s.mu;
        update_q(s, prob, cfg);
        if (cfg.check_stationarity)
            rec.q_stationarity = q_stationarity(s, prob, cfg);
        update_b(s, prob, cfg);
        update_a(s, cfg);
        update_e(s, cfg);
        std::tie(rec.res_qa, rec.res_be) = detail::primal_residuals(s);
        update_multipliers(s, cfg);
        detail::check_finite(s, it);
        rec.objective = objective(s, prob, cfg);
        if (!std::isfinite(rec.objective))
            fail(Errc::NonFinite, "objective is not finite at iteration " + std::to_string(it));
        rec.seconds = elapsed();
        s.iter = it;
        s.history.push_back(rec);
        if (std::max(rec.res_qa / std::sqrt(q_elems), rec.res_be / std::sqrt(b_elems)) <
            cfg.tol) {
            converged = true;
            break;
        }
    }

    SolveResult out;
    out.codes.fused = fuse_hash(s.B);
    out.codes.per_view = std::move(s.B);
    out.history = std::move(s.history);
    out.converged = converged;
    return out;
}

inline SolveResult solve(std::vector<BipartiteGraph> graphs, const SolverConfig &cfg) {
    return solve(Problem(std::move(graphs), cfg.conditioning), cfg);
}

} // namespace tpch
