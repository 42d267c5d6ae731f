#include "oracles.hpp"

#include <llmtp/prox.hpp>

#include <gtest/gtest.h>

using namespace llmtp;

TEST(Gst, ClosedFormCases) {
    EXPECT_EQ(gst_scalar(2.5, 0.0, 0.5), 2.5);
    EXPECT_EQ(gst_scalar(3.0, 1.0, 1.0), 2.0);
    EXPECT_EQ(gst_scalar(0.5, 1.0, 1.0), 0.0);
    EXPECT_EQ(gst_scalar(0.0, 1.0, 0.4), 0.0);
}

TEST(Gst, MatchesGridSearch) {
    const auto grid = oracle::gst_grid(2.0, 0.5, 0.5);
    EXPECT_NEAR(gst_scalar(2.0, 0.5, 0.5), grid.x, 1e-5);
}

TEST(Gst, GridAgreementOverParameterSweep) {
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9})
        for (double tau : {0.05, 0.2, 0.6, 1.0})
            for (double sigma : {0.1, 0.5, 1.0, 1.7, 2.5}) {
                const auto grid = oracle::gst_grid(sigma, tau, p);
                const double x = gst_scalar(sigma, tau, p);
                const double fx = 0.5 * (x - sigma) * (x - sigma) + tau * (x > 0 ? std::pow(x, p) : 0.0);
                EXPECT_LE(fx, grid.f + 1e-10) << sigma << ' ' << tau << ' ' << p;
                if (std::abs(fx - grid.f) > 1e-9) // not a tie between two minima
                    EXPECT_NEAR(x, grid.x, 1e-5) << sigma << ' ' << tau << ' ' << p;
            }
}

TEST(Gst, ThresholdSeparatesZeroBranch) {
    for (double p : {0.2, 0.5, 0.8}) {
        const double t = gst_threshold(0.7, p);
        EXPECT_EQ(gst_scalar(t * (1 - 1e-6), 0.7, p), 0.0);
        EXPECT_GT(gst_scalar(t * (1 + 1e-3), 0.7, p), 0.0);
    }
}

TEST(Gst, ReportsConvergence) {
    const GstResult r = gst_solve(3.0, 0.4, 0.5);
    EXPECT_TRUE(r.converged);
    EXPECT_GT(r.iterations, 0);
    EXPECT_NEAR(r.value, 3.0 - 0.4 * 0.5 * std::pow(r.value, -0.5), 1e-10);
}

TEST(Gst, RejectsBadArguments) {
    EXPECT_THROW(gst_scalar(-1.0, 0.5, 0.5), InvalidArgument);
    EXPECT_THROW(gst_scalar(1.0, -0.5, 0.5), InvalidArgument);
    EXPECT_THROW(gst_scalar(1.0, 0.5, 0.0), InvalidArgument);
}

TEST(SchattenProx, ZeroTauIsIdentity) {
    std::mt19937_64 rng(1);
    const Tensor3 z = oracle::random_tensor(3, 3, 4, rng);
    EXPECT_LE(max_abs_diff(schatten_prox(z, 0.0, 0.5), z), 1e-10);
}

TEST(SchattenProx, DepthOneP1IsMatrixSvt) {
    std::mt19937_64 rng(2);
    for (double tau : {0.1, 0.8, 2.0}) {
        const Tensor3 z = oracle::random_tensor(5, 3, 1, rng);
        EXPECT_LT((schatten_prox(z, tau, 1.0).slice(0) - oracle::matrix_svt(z.slice(0), tau))
                      .cwiseAbs()
                      .maxCoeff(),
                  1e-8);
    }
}

TEST(SchattenProx, MatchesNumericalMinimization) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 8; ++trial)
        for (double p : {0.5, 1.0}) {
            const Tensor3 z = oracle::random_tensor(2, 2, 2, rng);
            const double tau = 0.3;
            const double ours = oracle::prox_objective(schatten_prox(z, tau, p), z, tau, p);
            const double numeric = oracle::prox_numeric_min(z, tau, p, rng);
            EXPECT_LE(ours, numeric + 1e-3);
            EXPECT_NEAR(ours, numeric, 1e-3);
        }
}

TEST(SchattenProx, BeatsRandomPerturbations) {
    std::mt19937_64 rng(4);
    const Tensor3 z = oracle::random_tensor(2, 2, 2, rng);
    const Tensor3 x = schatten_prox(z, 0.3, 0.5);
    const double fx = schatten_prox_objective(x, z, 0.3, 0.5);
    EXPECT_NEAR(fx, oracle::prox_objective(x, z, 0.3, 0.5), 1e-8);
    for (int i = 0; i < 10000; ++i) {
        const Tensor3 y = x + oracle::random_tensor(2, 2, 2, rng, 0.05);
        EXPECT_LE(fx, schatten_prox_objective(y, z, 0.3, 0.5) + 1e-12);
    }
}

TEST(SchattenProx, UnitaryInvarianceDepthOne) {
    std::mt19937_64 rng(5);
    const Tensor3 z = oracle::random_tensor(4, 3, 1, rng);
    const auto q = oracle::random_orthonormal<Eigen::MatrixXd>(4, 4, rng);
    const auto r = oracle::random_orthonormal<Eigen::MatrixXd>(3, 3, rng);
    const Tensor3 rotated(std::vector<Eigen::MatrixXd>{q * z.slice(0) * r});
    const Eigen::MatrixXd expected = q * schatten_prox(z, 0.4, 0.6).slice(0) * r;
    EXPECT_LT((schatten_prox(rotated, 0.4, 0.6).slice(0) - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SchattenProx, ShrinksEverySingularValueAndDecreasesObjective) {
    std::mt19937_64 rng(6);
    for (double p : {0.3, 0.7, 1.0}) {
        const Tensor3 z = oracle::random_tensor(4, 3, 5, rng);
        const Tensor3 x = schatten_prox(z, 0.2, p);
        const auto before = spectral_singular_values(z);
        const auto after = spectral_singular_values(x);
        for (std::size_t k = 0; k < before.size(); ++k)
            EXPECT_TRUE(((after[k] - before[k]).array() <= 1e-10).all());
        EXPECT_LE(schatten_prox_objective(x, z, 0.2, p), schatten_prox_objective(z, z, 0.2, p));
    }
}

TEST(SchattenProx, LargeTauGivesZero) {
    std::mt19937_64 rng(7);
    const Tensor3 z = oracle::random_tensor(3, 3, 3, rng);
    EXPECT_EQ(schatten_prox(z, 1e6, 0.5).max_abs(), 0.0);
    EXPECT_EQ(schatten_prox(z, 1e6, 1.0).max_abs(), 0.0);
}
