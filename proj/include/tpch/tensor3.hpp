#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fftw3.h>

#include "tpch/error.hpp"

namespace tpch {

using Index = Eigen::Index;
using Complex = std::complex<double>;

/// Dense real third-order tensor stored as d3 contiguous column-major frontal slices.
///
/// Element (i, j, k) lives at i + d1*j + d1*d2*k, so slice(k) is a zero-copy
/// Eigen::Map and the mode-3 tubes are strided by d1*d2.
class Tensor3 {
public:
    Tensor3() = default;

    Tensor3(Index d1, Index d2, Index d3) : d1_(d1), d2_(d2), d3_(d3) {
        require(d1 >= 1 && d2 >= 1 && d3 >= 1, Errc::DimensionMismatch,
                "tensor dimensions must be >= 1, got " + shape_string(d1, d2, d3));
        values_.assign(static_cast<std::size_t>(d1 * d2 * d3), 0.0);
    }

    /// Stacks equally shaped matrices as frontal slices (view index on mode 3).
    static Tensor3 stack(std::span<const Eigen::MatrixXd> slices) {
        require(!slices.empty(), Errc::DimensionMismatch, "cannot stack zero slices");
        Tensor3 t(slices.front().rows(), slices.front().cols(), static_cast<Index>(slices.size()));
        for (Index k = 0; k < t.depth(); ++k) {
            const auto &s = slices[static_cast<std::size_t>(k)];
            require(s.rows() == t.rows() && s.cols() == t.cols(), Errc::DimensionMismatch,
                    "slice " + std::to_string(k) + " has shape " + std::to_string(s.rows()) + "x" +
                        std::to_string(s.cols()));
            t.slice(k) = s;
        }
        return t;
    }

    /// Identity tensor: first frontal slice is I_n, the rest are zero.
    static Tensor3 identity(Index n, Index d3) {
        Tensor3 t(n, n, d3);
        t.slice(0).setIdentity();
        return t;
    }

    Index rows() const noexcept { return d1_; }
    Index cols() const noexcept { return d2_; }
    Index depth() const noexcept { return d3_; }
    Index size() const noexcept { return d1_ * d2_ * d3_; }
    bool empty() const noexcept { return values_.empty(); }

    double &operator()(Index i, Index j, Index k) { return values_[offset(i, j, k)]; }
    double operator()(Index i, Index j, Index k) const { return values_[offset(i, j, k)]; }

    Eigen::Map<Eigen::MatrixXd> slice(Index k) {
        return {values_.data() + k * d1_ * d2_, d1_, d2_};
    }
    Eigen::Map<const Eigen::MatrixXd> slice(Index k) const {
        return {values_.data() + k * d1_ * d2_, d1_, d2_};
    }

    std::vector<Eigen::MatrixXd> unstack() const {
        std::vector<Eigen::MatrixXd> out;
        out.reserve(static_cast<std::size_t>(d3_));
        for (Index k = 0; k < d3_; ++k)
            out.emplace_back(slice(k));
        return out;
    }

    Eigen::Map<Eigen::VectorXd> flat() { return {values_.data(), size()}; }
    Eigen::Map<const Eigen::VectorXd> flat() const { return {values_.data(), size()}; }

    std::span<double> data() noexcept { return values_; }
    std::span<const double> data() const noexcept { return values_; }

    double norm() const { return flat().norm(); }
    bool all_finite() const { return flat().allFinite(); }
    bool same_shape(const Tensor3 &o) const {
        return d1_ == o.d1_ && d2_ == o.d2_ && d3_ == o.d3_;
    }
    std::string shape() const { return shape_string(d1_, d2_, d3_); }

    Tensor3 &operator+=(const Tensor3 &o) {
        check_same(o);
        flat() += o.flat();
        return *this;
    }
    Tensor3 &operator-=(const Tensor3 &o) {
        check_same(o);
        flat() -= o.flat();
        return *this;
    }
    Tensor3 &operator*=(double c) {
        flat() *= c;
        return *this;
    }
    friend Tensor3 operator+(Tensor3 a, const Tensor3 &b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3 &b) { return a -= b; }
    friend Tensor3 operator*(double c, Tensor3 a) { return a *= c; }
    friend Tensor3 operator*(Tensor3 a, double c) { return a *= c; }
    friend bool operator==(const Tensor3 &a, const Tensor3 &b) = default;

    static std::string shape_string(Index d1, Index d2, Index d3) {
        return std::to_string(d1) + "x" + std::to_string(d2) + "x" + std::to_string(d3);
    }

private:
    std::size_t offset(Index i, Index j, Index k) const {
        return static_cast<std::size_t>(i + d1_ * (j + d2_ * k));
    }
    void check_same(const Tensor3 &o) const {
        require(same_shape(o), Errc::DimensionMismatch, shape() + " vs " + o.shape());
    }

    Index d1_ = 0, d2_ = 0, d3_ = 0;
    std::vector<double> values_;
};

/// Mode-3 DFT of a real tensor: d3 complex d1 x d2 slices.
class SpectralStack {
public:
    SpectralStack() = default;
    SpectralStack(Index d1, Index d2, Index d3) : d1_(d1), d2_(d2) {
        slices_.assign(static_cast<std::size_t>(d3), Eigen::MatrixXcd::Zero(d1, d2));
    }

    Index rows() const noexcept { return d1_; }
    Index cols() const noexcept { return d2_; }
    Index depth() const noexcept { return static_cast<Index>(slices_.size()); }

    Eigen::MatrixXcd &slice(Index k) { return slices_[static_cast<std::size_t>(k)]; }
    const Eigen::MatrixXcd &slice(Index k) const { return slices_[static_cast<std::size_t>(k)]; }

    double norm() const {
        double sq = 0.0;
        for (const auto &s : slices_)
            sq += s.squaredNorm();
        return std::sqrt(sq);
    }

private:
    Index d1_ = 0, d2_ = 0;
    std::vector<Eigen::MatrixXcd> slices_;
};

namespace detail {

/// Number of independent spectral slices of a real tensor of depth d3.
inline Index half_depth(Index d3) { return d3 / 2 + 1; }

/// Slice k equals its own conjugate mirror (k = 0, or k = d3/2 for even d3).
inline bool self_conjugate(Index k, Index d3) { return k == 0 || 2 * k == d3; }

/// Multiplicity of half-spectrum slice k in the full spectrum.
inline double mirror_weight(Index k, Index d3) { return self_conjugate(k, d3) ? 1.0 : 2.0; }

struct FftwFree {
    void operator()(void *p) const noexcept { fftw_free(p); }
};
template <class T> using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T> FftwBuffer<T> fftw_alloc(std::size_t count) {
    auto *p = static_cast<T *>(fftw_malloc(sizeof(T) * (count == 0 ? 1 : count)));
    if (p == nullptr)
        throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

// Planner calls are not thread-safe in FFTW; execution is.
inline std::mutex &fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan p) const noexcept {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

/// Forward real-to-complex transform along mode 3; returns the d3/2+1 leading slices.
inline std::vector<Eigen::MatrixXcd> half_spectrum(const Tensor3 &t) {
    const Index d1 = t.rows(), d2 = t.cols(), d3 = t.depth();
    const Index tubes = d1 * d2, h = half_depth(d3);
    auto in = fftw_alloc<double>(static_cast<std::size_t>(t.size()));
    auto out = fftw_alloc<fftw_complex>(static_cast<std::size_t>(tubes * h));
    std::copy(t.data().begin(), t.data().end(), in.get());
    Plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        const int n = static_cast<int>(d3);
        plan.reset(fftw_plan_many_dft_r2c(1, &n, static_cast<int>(tubes), in.get(), nullptr,
                                          static_cast<int>(tubes), 1, out.get(), nullptr,
                                          static_cast<int>(tubes), 1, FFTW_ESTIMATE));
    }
    fftw_execute(plan.get());

    std::vector<Eigen::MatrixXcd> slices(static_cast<std::size_t>(h));
    for (Index k = 0; k < h; ++k) {
        auto &s = slices[static_cast<std::size_t>(k)];
        s.resize(d1, d2);
        const fftw_complex *src = out.get() + k * tubes;
        for (Index e = 0; e < tubes; ++e)
            s.data()[e] = Complex(src[e][0], src[e][1]);
    }
    return slices;
}

/// Inverse of half_spectrum (1/d3 normalised). Hermitian symmetry is implied, so the
/// imaginary parts of self-conjugate slices are ignored.
inline Tensor3 from_half_spectrum(const std::vector<Eigen::MatrixXcd> &half, Index d3) {
    require(!half.empty() && static_cast<Index>(half.size()) == half_depth(d3),
            Errc::DimensionMismatch, "half spectrum has wrong slice count");
    const Index d1 = half.front().rows(), d2 = half.front().cols();
    const Index tubes = d1 * d2, h = half_depth(d3);
    auto in = fftw_alloc<fftw_complex>(static_cast<std::size_t>(tubes * h));
    auto out = fftw_alloc<double>(static_cast<std::size_t>(tubes * d3));
    for (Index k = 0; k < h; ++k) {
        const auto &s = half[static_cast<std::size_t>(k)];
        require(s.rows() == d1 && s.cols() == d2, Errc::DimensionMismatch,
                "spectral slices differ in shape");
        fftw_complex *dst = in.get() + k * tubes;
        for (Index e = 0; e < tubes; ++e) {
            dst[e][0] = s.data()[e].real();
            dst[e][1] = s.data()[e].imag();
        }
    }
    Plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        const int n = static_cast<int>(d3);
        plan.reset(fftw_plan_many_dft_c2r(1, &n, static_cast<int>(tubes), in.get(), nullptr,
                                          static_cast<int>(tubes), 1, out.get(), nullptr,
                                          static_cast<int>(tubes), 1, FFTW_ESTIMATE));
    }
    fftw_execute(plan.get());

    Tensor3 t(d1, d2, d3);
    const double scale = 1.0 / static_cast<double>(d3);
    auto dst = t.data();
    for (std::size_t e = 0; e < dst.size(); ++e)
        dst[e] = out.get()[e] * scale;
    return t;
}

} // namespace detail

/// Unnormalised forward DFT along the third mode.
inline SpectralStack mode3_dft(const Tensor3 &t) {
    const Index d3 = t.depth();
    auto half = detail::half_spectrum(t);
    SpectralStack s(t.rows(), t.cols(), d3);
    for (Index k = 0; k < d3; ++k) {
        const Index src = k < detail::half_depth(d3) ? k : d3 - k;
        if (src == k)
            s.slice(k) = half[static_cast<std::size_t>(k)];
        else
            s.slice(k) = half[static_cast<std::size_t>(src)].conjugate();
    }
    return s;
}

/// Inverse mode-3 DFT with 1/d3 normalisation.
///
/// The imaginary residue of the inverse equals the anti-Hermitian part of the stack;
/// it is dropped when below 1e-8 of the tensor norm and rejected otherwise.
inline Tensor3 mode3_idft(const SpectralStack &s) {
    const Index d3 = s.depth();
    require(d3 >= 1, Errc::DimensionMismatch, "empty spectral stack");
    const Index h = detail::half_depth(d3);
    std::vector<Eigen::MatrixXcd> half(static_cast<std::size_t>(h));
    double anti_sq = 0.0;
    for (Index k = 0; k < d3; ++k) {
        const auto &mirror = s.slice((d3 - k) % d3);
        Eigen::MatrixXcd herm = 0.5 * (s.slice(k) + mirror.conjugate());
        anti_sq += (s.slice(k) - herm).squaredNorm();
        if (k < h)
            half[static_cast<std::size_t>(k)] = std::move(herm);
    }
    const double total = s.norm();
    if (std::sqrt(anti_sq) > 1e-8 * total)
        fail(Errc::ConjugateSymmetryViolation,
             "imaginary residue " + std::to_string(std::sqrt(anti_sq)) + " relative to norm " +
                 std::to_string(total));
    return detail::from_half_spectrum(half, d3);
}

/// Frontal-slice transpose with slices 1..d3-1 reversed, so that spectral slices are
/// conjugate-transposed.
inline Tensor3 t_transpose(const Tensor3 &t) {
    const Index d3 = t.depth();
    Tensor3 out(t.cols(), t.rows(), d3);
    for (Index k = 0; k < d3; ++k)
        out.slice(k) = t.slice((d3 - k) % d3).transpose();
    return out;
}

/// t-product: slice-wise products in the mode-3 Fourier domain.
inline Tensor3 t_product(const Tensor3 &a, const Tensor3 &b) {
    require(a.cols() == b.rows() && a.depth() == b.depth(), Errc::DimensionMismatch,
            "t_product of " + a.shape() + " and " + b.shape());
    auto fa = detail::half_spectrum(a);
    const auto fb = detail::half_spectrum(b);
    for (std::size_t k = 0; k < fa.size(); ++k)
        fa[k] = fa[k] * fb[k];
    return detail::from_half_spectrum(fa, a.depth());
}

} // namespace tpch
