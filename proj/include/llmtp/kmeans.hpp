#pragma once

#include <llmtp/error.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace llmtp {

struct KMeansOptions {
    int max_iter = 100;
    /// Lloyd stops once the relative inertia change falls below this.
    double tol = 1e-6;
    /// Independent k-means++ restarts; the lowest inertia wins.
    int restarts = 1;
    std::uint64_t seed = 0;
};

struct KMeansResult {
    Eigen::MatrixXd centroids; // k x d
    std::vector<int> labels;
    double inertia = 0;
    int iterations = 0;
};

namespace detail {

/// Squared Euclidean distances between the rows of x and the rows of c.
inline Eigen::MatrixXd pairwise_sq_dist(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
    Eigen::MatrixXd d = (-2.0 * x * c.transpose()).eval();
    d.colwise() += x.rowwise().squaredNorm();
    d.rowwise() += c.rowwise().squaredNorm().transpose();
    return d.cwiseMax(0.0);
}

inline Eigen::Index count_distinct_rows(const Eigen::MatrixXd& x, Eigen::Index stop_at) {
    std::vector<Eigen::Index> reps;
    for (Eigen::Index i = 0; i < x.rows() && static_cast<Eigen::Index>(reps.size()) < stop_at;
         ++i) {
        bool seen = false;
        for (auto r : reps)
            if (x.row(r) == x.row(i)) {
                seen = true;
                break;
            }
        if (!seen)
            reps.push_back(i);
    }
    return static_cast<Eigen::Index>(reps.size());
}

inline Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd centers(k, x.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = x.row(first(rng));
    Eigen::VectorXd best = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
        const double total = best.sum();
        if (!(total > 0))
            throw DegenerateData("k-means++: fewer distinct rows than requested centers");
        const double target = unif(rng) * total;
        double acc = 0;
        Eigen::Index pick = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (best[i] <= 0)
                continue;
            acc += best[i];
            pick = i;
            if (acc >= target)
                break;
        }
        centers.row(c) = x.row(pick);
        best = best.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

inline KMeansResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centers,
                          const KMeansOptions& opt) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = centers.rows();
    KMeansResult r;
    r.labels.assign(static_cast<std::size_t>(n), 0);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= std::max(1, opt.max_iter); ++it) {
        const Eigen::MatrixXd d = pairwise_sq_dist(x, centers);
        Eigen::VectorXd own(n);
        double inertia = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index j;
            own[i] = d.row(i).minCoeff(&j);
            r.labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
            inertia += own[i];
        }
        r.inertia = inertia;
        r.iterations = it;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(r.labels[static_cast<std::size_t>(i)]) += x.row(i);
            counts[r.labels[static_cast<std::size_t>(i)]] += 1;
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centers.row(c) = sums.row(c) / counts[c];
                continue;
            }
            // empty cluster: move it onto the worst-served point
            Eigen::Index far;
            own.maxCoeff(&far);
            centers.row(c) = x.row(far);
            own[far] = 0;
        }
        if (inertia == 0 || std::abs(prev - inertia) <= opt.tol * prev)
            break;
        prev = inertia;
    }
    // final assignment against the returned centroids
    const Eigen::MatrixXd d = pairwise_sq_dist(x, centers);
    r.inertia = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index j;
        r.inertia += d.row(i).minCoeff(&j);
        r.labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
    }
    r.centroids = std::move(centers);
    return r;
}

} // namespace detail

/// k-means++ seeding followed by Lloyd iterations on the rows of x.
/// Deterministic for a fixed seed.
inline KMeansResult kmeans(const Eigen::MatrixXd& x, int k, const KMeansOptions& opt = {}) {
    if (k < 1 || k > x.rows())
        throw InvalidArgument("kmeans: need 1 <= k <= number of rows");
    if (detail::count_distinct_rows(x, k) < k)
        throw DegenerateData("kmeans: fewer than " + std::to_string(k) + " distinct rows");
    std::mt19937_64 rng(opt.seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, opt.restarts); ++r) {
        auto run = detail::lloyd(x, detail::kmeanspp_seed(x, k, rng), opt);
        if (run.inertia < best.inertia)
            best = std::move(run);
    }
    return best;
}

} // namespace llmtp
