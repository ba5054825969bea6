#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "tpch/error.hpp"
#include "tpch/tensor3.hpp"

namespace tpch {

/// Relative cut-off below which spectral singular values are treated as zero.
inline constexpr double kSingularValueCutoff = 1e-12;

enum class SvdShape {
    Full,    ///< U: d1 x d1 x d3, S: d1 x d2 x d3, V: d2 x d2 x d3
    Economy, ///< U: d1 x D x d3, S: D x D x d3, V: d2 x D x d3 with D = min(d1, d2)
};

/// t-SVD factors with t = U * S * t_transpose(V).
struct TSvdFactors {
    Tensor3 U;
    Tensor3 S;
    Tensor3 V;
};

/// Spectral singular values arranged as a D x d3 matrix: entry (i, j) is the i-th
/// singular value of spectral slice j.
struct CoreMatrix {
    Eigen::MatrixXd values;

    Index rows() const noexcept { return values.rows(); }
    Index cols() const noexcept { return values.cols(); }
};

namespace detail {

struct SliceSvd {
    Eigen::MatrixXcd U;
    Eigen::VectorXd s;
    Eigen::MatrixXcd V;
};

// Self-conjugate spectral slices are real for real tensors. Decomposing their real
// part keeps U and V real there, which the inverse transform relies on.
inline SliceSvd slice_svd(const Eigen::MatrixXcd &m, bool real_slice, unsigned options) {
    SliceSvd out;
    bool ok = false;
    if (real_slice) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m.real(), options);
        ok = svd.info() == Eigen::Success;
        out.s = svd.singularValues();
        if (svd.computeU())
            out.U = svd.matrixU().cast<Complex>();
        if (svd.computeV())
            out.V = svd.matrixV().cast<Complex>();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, options);
        ok = svd.info() == Eigen::Success;
        out.s = svd.singularValues();
        if (svd.computeU())
            out.U = svd.matrixU();
        if (svd.computeV())
            out.V = svd.matrixV();
    }
    if (!ok || !out.s.allFinite())
        fail(Errc::SvdNonConvergence, "slice decomposition of a " + std::to_string(m.rows()) +
                                          "x" + std::to_string(m.cols()) + " matrix failed");
    return out;
}

/// Slice SVDs of the half spectrum, with the global relative cut-off applied.
inline std::vector<SliceSvd> spectral_svd(const std::vector<Eigen::MatrixXcd> &half, Index d3,
                                          unsigned options) {
    std::vector<SliceSvd> out;
    out.reserve(half.size());
    double largest = 0.0;
    for (std::size_t k = 0; k < half.size(); ++k) {
        out.push_back(slice_svd(half[k], self_conjugate(static_cast<Index>(k), d3), options));
        if (out.back().s.size() > 0)
            largest = std::max(largest, out.back().s.maxCoeff());
    }
    const double cutoff = kSingularValueCutoff * largest;
    for (auto &f : out)
        f.s = (f.s.array() < cutoff).select(0.0, f.s);
    return out;
}

inline double mirrored_sum(const std::vector<SliceSvd> &half, Index d3) {
    double total = 0.0;
    for (std::size_t k = 0; k < half.size(); ++k)
        total += mirror_weight(static_cast<Index>(k), d3) * half[k].s.sum();
    return total;
}

inline CoreMatrix core_from_half(const std::vector<SliceSvd> &half, Index d3) {
    const Index D = half.front().s.size();
    CoreMatrix cm{Eigen::MatrixXd::Zero(D, d3)};
    for (Index j = 0; j < d3; ++j) {
        const Index src = j < half_depth(d3) ? j : d3 - j;
        cm.values.col(j) = half[static_cast<std::size_t>(src)].s;
    }
    return cm;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
svt_impl(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> &m, double tau) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (tau == 0.0 || m.size() == 0)
        return m;
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success || !svd.singularValues().allFinite())
        fail(Errc::SvdNonConvergence, "matrix_svt decomposition failed");
    const Eigen::VectorXd shrunk = (svd.singularValues().array() - tau).cwiseMax(0.0);
    Index rank = 0;
    while (rank < shrunk.size() && shrunk(rank) > 0.0)
        ++rank;
    if (rank == 0)
        return Mat::Zero(m.rows(), m.cols());
    return svd.matrixU().leftCols(rank) *
           shrunk.head(rank).template cast<Scalar>().asDiagonal() *
           svd.matrixV().leftCols(rank).adjoint();
}

} // namespace detail

inline double nuclear_norm(const Eigen::MatrixXd &m) {
    if (m.size() == 0)
        return 0.0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    if (svd.info() != Eigen::Success)
        fail(Errc::SvdNonConvergence, "nuclear norm decomposition failed");
    return svd.singularValues().sum();
}

/// t-SVD computed slice-wise in the Fourier domain. Only the leading d3/2+1 spectral
/// slices are decomposed; the rest are their conjugate mirrors.
inline TSvdFactors t_svd(const Tensor3 &t, SvdShape shape = SvdShape::Full) {
    const Index d1 = t.rows(), d2 = t.cols(), d3 = t.depth(), D = std::min(d1, d2);
    const unsigned options = shape == SvdShape::Full
                                 ? (Eigen::ComputeFullU | Eigen::ComputeFullV)
                                 : (Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto half = detail::spectral_svd(detail::half_spectrum(t), d3, options);

    const Index sr = shape == SvdShape::Full ? d1 : D;
    const Index sc = shape == SvdShape::Full ? d2 : D;
    std::vector<Eigen::MatrixXcd> u(half.size()), s(half.size()), v(half.size());
    for (std::size_t k = 0; k < half.size(); ++k) {
        u[k] = half[k].U;
        v[k] = half[k].V;
        s[k] = Eigen::MatrixXcd::Zero(sr, sc);
        s[k].diagonal().head(D) = half[k].s.cast<Complex>();
    }
    return {detail::from_half_spectrum(u, d3), detail::from_half_spectrum(s, d3),
            detail::from_half_spectrum(v, d3)};
}

/// Tensor nuclear norm, (1/d3) times the sum of nuclear norms of all spectral slices.
inline double tnn(const Tensor3 &t) {
    const auto half = detail::spectral_svd(detail::half_spectrum(t), t.depth(), 0);
    return detail::mirrored_sum(half, t.depth()) / static_cast<double>(t.depth());
}

/// Core matrix of t computed directly from its spectral singular values.
inline CoreMatrix core_matrix(const Tensor3 &t) {
    const auto half = detail::spectral_svd(detail::half_spectrum(t), t.depth(), 0);
    return detail::core_from_half(half, t.depth());
}

/// Reads the spectral diagonals of the f-diagonal core S.
inline CoreMatrix extract_core_matrix(const TSvdFactors &factors) {
    const Tensor3 &S = factors.S;
    const Index d3 = S.depth(), D = std::min(S.rows(), S.cols());
    const auto half = detail::half_spectrum(S);
    CoreMatrix cm{Eigen::MatrixXd::Zero(D, d3)};
    for (Index j = 0; j < d3; ++j) {
        const Index src = j < detail::half_depth(d3) ? j : d3 - j;
        cm.values.col(j) = half[static_cast<std::size_t>(src)].diagonal().head(D).real();
    }
    return cm;
}

/// Builds the f-diagonal d1 x d2 x d3 tensor whose spectral slice j has diagonal
/// cm.values.col(j). Columns j and d3-j must agree for the result to be real.
inline Tensor3 fold_core_matrix(const CoreMatrix &cm, Index d1, Index d2, Index d3) {
    const Index D = std::min(d1, d2);
    require(cm.rows() == D && cm.cols() == d3, Errc::DimensionMismatch,
            "core matrix " + std::to_string(cm.rows()) + "x" + std::to_string(cm.cols()) +
                " does not fit a " + Tensor3::shape_string(d1, d2, d3) + " tensor");
    SpectralStack s(d1, d2, d3);
    for (Index j = 0; j < d3; ++j)
        s.slice(j).diagonal().head(D) = cm.values.col(j).cast<Complex>();
    return mode3_idft(s);
}

/// Proximal operator of tau * nuclear norm: singular values soft-thresholded by tau.
inline Eigen::MatrixXd matrix_svt(const Eigen::MatrixXd &m, double tau) {
    require(tau >= 0.0, Errc::InvalidArgs, "svt threshold must be >= 0");
    return detail::svt_impl(m, tau);
}

/// Applies matrix SVT with threshold tau to every spectral slice.
inline Tensor3 tensor_svt(const Tensor3 &t, double tau) {
    require(tau >= 0.0, Errc::InvalidArgs, "svt threshold must be >= 0");
    if (tau == 0.0)
        return t;
    const Index d3 = t.depth();
    auto half = detail::half_spectrum(t);
    for (std::size_t k = 0; k < half.size(); ++k) {
        if (detail::self_conjugate(static_cast<Index>(k), d3))
            half[k] = detail::svt_impl<double>(half[k].real(), tau).cast<Complex>();
        else
            half[k] = detail::svt_impl<Complex>(half[k], tau);
    }
    return detail::from_half_spectrum(half, d3);
}

/// Enhanced tensor nuclear norm: nuclear norm of the core matrix plus zeta * tnn.
inline double etnn(const Tensor3 &t, double zeta) {
    const auto half = detail::spectral_svd(detail::half_spectrum(t), t.depth(), 0);
    const CoreMatrix cm = detail::core_from_half(half, t.depth());
    return nuclear_norm(cm.values) +
           zeta * detail::mirrored_sum(half, t.depth()) / static_cast<double>(t.depth());
}

/// Two-stage proximal step for the enhanced tensor nuclear norm.
///
/// Stage one soft-thresholds the core matrix of t by lambda / mu. Stage two rebuilds
/// G = U * fold(core) * V^T from the same t-SVD factors and applies tensor_svt(G, zeta / mu).
/// Since U diag(c) V^H is already an SVD of each spectral slice of G (up to the sign of c),
/// stage two shrinks |c| directly instead of decomposing G again.
inline Tensor3 etnn_prox(const Tensor3 &t, double mu, double zeta, double lambda) {
    require(mu > 0.0 && zeta >= 0.0 && lambda >= 0.0, Errc::InvalidArgs,
            "etnn_prox needs mu > 0, zeta >= 0, lambda >= 0");
    if (zeta == 0.0 && lambda == 0.0)
        return t;
    const Index d3 = t.depth();
    const auto half = detail::spectral_svd(detail::half_spectrum(t), d3,
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
    const CoreMatrix core = detail::core_from_half(half, d3);
    const Eigen::MatrixXd low_rank = matrix_svt(core.values, lambda / mu);
    const double tau = zeta / mu;

    std::vector<Eigen::MatrixXcd> out(half.size());
    for (std::size_t k = 0; k < half.size(); ++k) {
        const Eigen::VectorXd c = low_rank.col(static_cast<Index>(k));
        const Eigen::VectorXd shrunk =
            c.array().sign() * (c.array().abs() - tau).cwiseMax(0.0);
        out[k] = half[k].U * shrunk.cast<Complex>().asDiagonal() * half[k].V.adjoint();
    }
    return detail::from_half_spectrum(out, d3);
}

} // namespace tpch
