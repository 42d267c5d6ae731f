#pragma once

#include <llmtp/error.hpp>
#include <llmtp/parallel.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace llmtp {

using Index = Eigen::Index;
using cplx = std::complex<double>;

/// Shape of a third-order tensor: rows x cols x depth (n1 x n2 x n3).
struct Dims {
    Index rows = 0;
    Index cols = 0;
    Index depth = 0;
    friend bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(const Dims& d) {
    return std::to_string(d.rows) + "x" + std::to_string(d.cols) + "x" + std::to_string(d.depth);
}

/// Dense third-order tensor stored as a list of frontal slices.
template <class Scalar>
class BasicTensor3 {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    BasicTensor3() = default;

    BasicTensor3(Index rows, Index cols, Index depth)
        : rows_(rows), cols_(cols),
          slices_(static_cast<std::size_t>(depth), Matrix::Zero(rows, cols)) {
        if (rows < 1 || cols < 1 || depth < 1)
            throw InvalidArgument("tensor dimensions must be positive, got " +
                                  to_string(Dims{rows, cols, depth}));
    }

    explicit BasicTensor3(std::vector<Matrix> slices) : slices_(std::move(slices)) {
        if (slices_.empty())
            throw InvalidArgument("tensor needs at least one frontal slice");
        rows_ = slices_.front().rows();
        cols_ = slices_.front().cols();
        if (rows_ < 1 || cols_ < 1)
            throw InvalidArgument("tensor slices must be non-empty");
        for (const auto& s : slices_) {
            if (s.rows() != rows_ || s.cols() != cols_)
                throw DimensionMismatch("frontal slices have inconsistent shapes");
            if (!s.allFinite())
                throw NonFiniteValue("tensor entries must be finite");
        }
    }

    static BasicTensor3 zeros(Dims d) { return BasicTensor3(d.rows, d.cols, d.depth); }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index depth() const { return static_cast<Index>(slices_.size()); }
    Dims dims() const { return {rows_, cols_, depth()}; }

    Matrix& slice(Index k) { return slices_[static_cast<std::size_t>(k)]; }
    const Matrix& slice(Index k) const { return slices_[static_cast<std::size_t>(k)]; }
    const std::vector<Matrix>& slices() const { return slices_; }

    Scalar& operator()(Index i, Index j, Index k) { return slice(k)(i, j); }
    const Scalar& operator()(Index i, Index j, Index k) const { return slice(k)(i, j); }

    double squared_norm() const {
        double s = 0;
        for (const auto& m : slices_)
            s += m.squaredNorm();
        return s;
    }
    double frobenius_norm() const { return std::sqrt(squared_norm()); }

    /// Largest entry magnitude.
    double max_abs() const {
        double v = 0;
        for (const auto& m : slices_)
            v = std::max(v, static_cast<double>(m.cwiseAbs().maxCoeff()));
        return v;
    }

    bool all_finite() const {
        for (const auto& m : slices_)
            if (!m.allFinite())
                return false;
        return true;
    }

    BasicTensor3& operator+=(const BasicTensor3& o) {
        check_same(o);
        for (std::size_t k = 0; k < slices_.size(); ++k)
            slices_[k] += o.slices_[k];
        return *this;
    }
    BasicTensor3& operator-=(const BasicTensor3& o) {
        check_same(o);
        for (std::size_t k = 0; k < slices_.size(); ++k)
            slices_[k] -= o.slices_[k];
        return *this;
    }
    BasicTensor3& operator*=(Scalar a) {
        for (auto& m : slices_)
            m *= a;
        return *this;
    }
    friend BasicTensor3 operator+(BasicTensor3 a, const BasicTensor3& b) { return a += b; }
    friend BasicTensor3 operator-(BasicTensor3 a, const BasicTensor3& b) { return a -= b; }
    friend BasicTensor3 operator*(BasicTensor3 a, Scalar s) { return a *= s; }
    friend BasicTensor3 operator*(Scalar s, BasicTensor3 a) { return a *= s; }

private:
    void check_same(const BasicTensor3& o) const {
        if (dims() != o.dims())
            throw DimensionMismatch("tensor shapes differ: " + to_string(dims()) + " vs " +
                                    to_string(o.dims()));
    }

    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Matrix> slices_;
};

using Tensor3 = BasicTensor3<double>;
/// Image of a real tensor under the DFT along the third dimension.
using FreqTensor = BasicTensor3<cplx>;

/// Largest entrywise difference between two equally shaped tensors.
template <class Scalar>
double max_abs_diff(const BasicTensor3<Scalar>& a, const BasicTensor3<Scalar>& b) {
    return (a - b).max_abs();
}

/// t-SVD factors, kept in the frequency domain. Slice i satisfies
/// A_i = U_i * S_i * V_i^H with S_i real, non-negative and non-increasing.
struct TSvdFactors {
    FreqTensor U;
    FreqTensor S;
    FreqTensor V;
};

namespace detail {

/// Number of frequency slices that determine the spectrum of a real tensor.
inline Index unique_frequency_count(Index n3) { return n3 / 2 + 1; }

/// Slices 0 and n3/2 (n3 even) of a real tensor's spectrum are real.
inline bool self_conjugate(Index k, Index n3) { return k == 0 || 2 * k == n3; }

inline cplx twiddle(Index j, Index k, Index n3, double sign) {
    const Index r = (j * k) % n3;
    return std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(r) /
                               static_cast<double>(n3));
}

/// Completes the spectrum of a real tensor from its first n3/2+1 slices.
inline void fill_conjugate_slices(FreqTensor& f) {
    const Index n3 = f.depth();
    for (Index k = unique_frequency_count(n3); k < n3; ++k)
        f.slice(k) = f.slice(n3 - k).conjugate();
}

/// Evaluates fn(k) on every unique frequency, then fills the mirrored ones.
template <class F>
void for_each_unique_frequency(FreqTensor& out, F&& fn) {
    const Index n3 = out.depth();
    parallel_for(unique_frequency_count(n3), [&](Index k) { out.slice(k) = fn(k); });
    fill_conjugate_slices(out);
}

/// Applies a scalar-generic kernel to a frequency slice, running it in real
/// arithmetic when the slice is one of the self-conjugate ones.
template <class Kernel, class... Slices>
Eigen::MatrixXcd apply_spectral(bool real_slice, Kernel&& kernel, const Slices&... slices) {
    if (real_slice)
        return kernel(Eigen::MatrixXd(slices.real())...).template cast<cplx>();
    return kernel(slices...);
}

template <class Matrix>
void check_svd_output(const Matrix& m, const char* where) {
    if (!m.allFinite())
        throw SvdFailure(std::string("SVD produced non-finite values in ") + where);
}

} // namespace detail

/// Unnormalized forward DFT along the third dimension.
inline FreqTensor dft_slices(const Tensor3& t) {
    const Index n3 = t.depth();
    FreqTensor out(t.rows(), t.cols(), n3);
    detail::for_each_unique_frequency(out, [&](Index k) {
        if (detail::self_conjugate(k, n3)) {
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(t.rows(), t.cols());
            for (Index j = 0; j < n3; ++j)
                acc += detail::twiddle(j, k, n3, -1.0).real() * t.slice(j);
            return Eigen::MatrixXcd(acc.cast<cplx>());
        }
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(t.rows(), t.cols());
        for (Index j = 0; j < n3; ++j)
            acc += detail::twiddle(j, k, n3, -1.0) * t.slice(j).cast<cplx>();
        return acc;
    });
    return out;
}

namespace detail {
inline std::vector<Eigen::MatrixXcd> inverse_dft_complex(const FreqTensor& f) {
    const Index n3 = f.depth();
    std::vector<Eigen::MatrixXcd> out(static_cast<std::size_t>(n3));
    parallel_for(n3, [&](Index j) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(f.rows(), f.cols());
        for (Index k = 0; k < n3; ++k)
            acc += twiddle(j, k, n3, 1.0) * f.slice(k);
        out[static_cast<std::size_t>(j)] = acc / static_cast<double>(n3);
    });
    return out;
}
} // namespace detail

/// Largest imaginary magnitude of the inverse DFT of f. Zero (up to rounding)
/// exactly when f is the spectrum of a real tensor.
inline double imaginary_residue(const FreqTensor& f) {
    double r = 0;
    for (const auto& s : detail::inverse_dft_complex(f))
        r = std::max(r, s.imag().cwiseAbs().maxCoeff());
    return r;
}

inline constexpr double kImaginaryResidueLimit = 1e-6;

/// Inverse DFT along the third dimension (1/n3 scaled). Throws
/// ImaginaryResidueTooLarge when the result is not real.
inline Tensor3 idft_slices(const FreqTensor& f) {
    auto full = detail::inverse_dft_complex(f);
    double residue = 0;
    std::vector<Eigen::MatrixXd> real(full.size());
    for (std::size_t j = 0; j < full.size(); ++j) {
        residue = std::max(residue, full[j].imag().cwiseAbs().maxCoeff());
        real[j] = full[j].real();
    }
    if (!(residue <= kImaginaryResidueLimit))
        throw ImaginaryResidueTooLarge(residue);
    return Tensor3(std::move(real));
}

/// Frontal slice 0 is the identity, the others are zero.
inline Tensor3 identity_tensor(Index n, Index n3) {
    Tensor3 t(n, n, n3);
    t.slice(0).setIdentity();
    return t;
}

/// t-product: slice-wise matrix product in the frequency domain.
inline Tensor3 t_product(const Tensor3& a, const Tensor3& b) {
    if (a.cols() != b.rows() || a.depth() != b.depth())
        throw DimensionMismatch("t_product: cannot multiply " + to_string(a.dims()) + " by " +
                                to_string(b.dims()));
    const FreqTensor fa = dft_slices(a);
    const FreqTensor fb = dft_slices(b);
    FreqTensor fc(a.rows(), b.cols(), a.depth());
    detail::for_each_unique_frequency(fc, [&](Index k) {
        return detail::apply_spectral(
            detail::self_conjugate(k, a.depth()),
            [](const auto& x, const auto& y) { return (x * y).eval(); }, fa.slice(k),
            fb.slice(k));
    });
    return idft_slices(fc);
}

/// Transposes every frontal slice and reverses slices 1..n3-1, so that
/// t_transpose(a * b) = t_transpose(b) * t_transpose(a).
inline Tensor3 t_transpose(const Tensor3& a) {
    const Index n3 = a.depth();
    Tensor3 out(a.cols(), a.rows(), n3);
    out.slice(0) = a.slice(0).transpose();
    for (Index k = 1; k < n3; ++k)
        out.slice(k) = a.slice(n3 - k).transpose();
    return out;
}

/// Per-frequency-slice SVD of a real tensor.
inline TSvdFactors t_svd(const Tensor3& a) {
    const Index n1 = a.rows(), n2 = a.cols(), n3 = a.depth();
    const Index h = std::min(n1, n2);
    const FreqTensor fa = dft_slices(a);
    TSvdFactors f{FreqTensor(n1, h, n3), FreqTensor(h, h, n3), FreqTensor(n2, h, n3)};

    auto decompose = [&](const auto& m, Index k) {
        using Mat = std::decay_t<decltype(m)>;
        Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        detail::check_svd_output(svd.singularValues(), "t_svd");
        detail::check_svd_output(svd.matrixU(), "t_svd");
        detail::check_svd_output(svd.matrixV(), "t_svd");
        f.U.slice(k) = svd.matrixU().template cast<cplx>();
        f.S.slice(k) = svd.singularValues().template cast<cplx>().asDiagonal();
        f.V.slice(k) = svd.matrixV().template cast<cplx>();
    };
    parallel_for(detail::unique_frequency_count(n3), [&](Index k) {
        if (detail::self_conjugate(k, n3))
            decompose(Eigen::MatrixXd(fa.slice(k).real()), k);
        else
            decompose(fa.slice(k), k);
    });
    detail::fill_conjugate_slices(f.U);
    detail::fill_conjugate_slices(f.S);
    detail::fill_conjugate_slices(f.V);
    return f;
}

/// Singular values of every frequency slice of t.
inline std::vector<Eigen::VectorXd> spectral_singular_values(const Tensor3& t) {
    const FreqTensor ft = dft_slices(t);
    const Index n3 = t.depth();
    std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(n3));
    parallel_for(detail::unique_frequency_count(n3), [&](Index k) {
        Eigen::VectorXd sv;
        if (detail::self_conjugate(k, n3))
            sv = Eigen::JacobiSVD<Eigen::MatrixXd>(Eigen::MatrixXd(ft.slice(k).real()))
                     .singularValues();
        else
            sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(ft.slice(k)).singularValues();
        detail::check_svd_output(sv, "spectral_singular_values");
        out[static_cast<std::size_t>(k)] = std::move(sv);
    });
    for (Index k = detail::unique_frequency_count(n3); k < n3; ++k)
        out[static_cast<std::size_t>(k)] = out[static_cast<std::size_t>(n3 - k)];
    return out;
}

inline void check_schatten_p(double p) {
    if (!(p > 0.0 && p <= 1.0))
        throw InvalidArgument("Schatten p must lie in (0, 1], got " + std::to_string(p));
}

/// Sum over frequency slices of sigma^p, i.e. the p-th power of the tensor
/// Schatten p-norm.
inline double schatten_p_power(const Tensor3& t, double p) {
    check_schatten_p(p);
    double s = 0;
    for (const auto& sv : spectral_singular_values(t))
        for (Index j = 0; j < sv.size(); ++j)
            if (sv[j] > 0)
                s += std::pow(sv[j], p);
    return s;
}

inline double schatten_p_norm(const Tensor3& t, double p) {
    return std::pow(schatten_p_power(t, p), 1.0 / p);
}

/// Maps a conjugate-symmetric spectrum (e.g. a t-SVD factor) back to a real tensor.
inline Tensor3 to_signal(const FreqTensor& f) { return idft_slices(f); }

/// Reconstructs U * S * V^T from t-SVD factors.
inline Tensor3 reconstruct(const TSvdFactors& f) {
    FreqTensor out(f.U.rows(), f.V.rows(), f.U.depth());
    for (Index k = 0; k < out.depth(); ++k)
        out.slice(k) = f.U.slice(k) * f.S.slice(k) * f.V.slice(k).adjoint();
    return idft_slices(out);
}

} // namespace llmtp
