#pragma once

#include <llmtp/error.hpp>
#include <llmtp/tensor.hpp>

#include <cmath>
#include <string>

namespace llmtp {

struct ProxParams {
    double tau = 0;
    double p = 1;

    void validate() const {
        if (!(tau >= 0) || !std::isfinite(tau))
            throw InvalidArgument("prox tau must be finite and >= 0");
        check_schatten_p(p);
    }
};

struct GstResult {
    double value = 0;
    bool converged = true;
    int iterations = 0;
};

/// Smallest sigma for which argmin_{x>=0} (x - sigma)^2 / 2 + tau x^p is
/// non-zero (p < 1).
inline double gst_threshold(double tau, double p) {
    if (p >= 1.0)
        return tau;
    const double base = 2.0 * tau * (1.0 - p);
    return std::pow(base, 1.0 / (2.0 - p)) + tau * p * std::pow(base, (p - 1.0) / (2.0 - p));
}

/// Generalized soft-thresholding: argmin_{x>=0} (x - sigma)^2 / 2 + tau x^p.
/// For p < 1 the non-zero branch is found by the fixed point
/// x <- sigma - tau p x^(p-1) started at x = sigma.
inline GstResult gst_solve(double sigma, double tau, double p) {
    if (!(sigma >= 0))
        throw InvalidArgument("gst: sigma must be >= 0");
    ProxParams{tau, p}.validate();
    if (tau == 0)
        return {sigma, true, 0};
    if (p == 1.0)
        return {std::max(sigma - tau, 0.0), true, 0};
    if (sigma <= gst_threshold(tau, p))
        return {0.0, true, 0};

    constexpr int kMaxIter = 200;
    constexpr double kTol = 1e-12;
    double x = sigma;
    for (int it = 1; it <= kMaxIter; ++it) {
        const double next = sigma - tau * p * std::pow(x, p - 1.0);
        const double step = std::abs(next - x);
        x = next;
        // relative once x > 1 so that large singular values can still converge in double precision
        if (step < kTol * std::max(1.0, x))
            return {x, true, it};
    }
    return {x, false, kMaxIter};
}

inline double gst_scalar(double sigma, double tau, double p) {
    return gst_solve(sigma, tau, p).value;
}

/// Proximal operator of tau * ||.||_Sp^p: argmin_X ||X - Z||_F^2 / 2 + tau ||X||_Sp^p.
///
/// The Frobenius term lives in the signal domain while the norm is defined on
/// the unnormalized DFT slices, so ||X - Z||_F^2 = (1/n3) sum_i ||Xbar_i - Zbar_i||_F^2
/// and each frequency slice is shrunk with threshold tau * n3.
inline Tensor3 schatten_prox(const Tensor3& z, double tau, double p) {
    ProxParams{tau, p}.validate();
    if (tau == 0)
        return z;
    TSvdFactors f = t_svd(z);
    const double tau_eff = tau * static_cast<double>(z.depth());
    for (Index k = 0; k < f.S.depth(); ++k) {
        auto& s = f.S.slice(k);
        for (Index j = 0; j < s.rows(); ++j)
            s(j, j) = gst_scalar(s(j, j).real(), tau_eff, p);
    }
    return reconstruct(f);
}

/// ||X - Z||_F^2 / 2 + tau ||X||_Sp^p
inline double schatten_prox_objective(const Tensor3& x, const Tensor3& z, double tau, double p) {
    return 0.5 * (x - z).squared_norm() + tau * schatten_p_power(x, p);
}

} // namespace llmtp
