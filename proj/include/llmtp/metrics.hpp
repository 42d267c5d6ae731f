#pragma once

#include <llmtp/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace llmtp::metrics {

struct Scores {
    double acc = 0;
    double nmi = 0;
    double purity = 0;
};

/// Kuhn-Munkres with row/column potentials. Returns perm with perm[i] the
/// column assigned to row i, minimizing sum_i cost(i, perm[i]).
inline std::vector<int> optimal_assignment(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols())
        throw DimensionMismatch("optimal_assignment: cost matrix must be square");
    if (!cost.allFinite())
        throw InvalidArgument("optimal_assignment: cost entries must be finite");
    const int n = static_cast<int>(cost.rows());
    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays, column 0 is the virtual start
    std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j)
        perm[static_cast<std::size_t>(match[j] - 1)] = j - 1;
    return perm;
}

namespace detail {
inline void check_labels(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size())
        throw LengthMismatch("label vectors differ in length: " + std::to_string(pred.size()) +
                             " vs " + std::to_string(truth.size()));
    if (pred.empty())
        throw LengthMismatch("label vectors are empty");
    for (auto s : {pred, truth})
        for (int l : s)
            if (l < 0)
                throw InvalidArgument("labels must be non-negative");
}
} // namespace detail

/// Square contingency table: entry (a, b) counts samples with pred a and
/// truth b. Padded with zeros to max(K_pred, K_truth).
inline Eigen::MatrixXd contingency(std::span<const int> pred, std::span<const int> truth) {
    detail::check_labels(pred, truth);
    const int k = 1 + std::max(*std::max_element(pred.begin(), pred.end()),
                               *std::max_element(truth.begin(), truth.end()));
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < pred.size(); ++i)
        c(pred[i], truth[i]) += 1;
    return c;
}

/// Fraction of samples correctly labelled under the best one-to-one
/// cluster-to-class mapping.
inline double acc(std::span<const int> pred, std::span<const int> truth) {
    const Eigen::MatrixXd c = contingency(pred, truth);
    const auto perm = optimal_assignment(-c);
    double hit = 0;
    for (std::size_t a = 0; a < perm.size(); ++a)
        hit += c(static_cast<Eigen::Index>(a), perm[a]);
    return hit / static_cast<double>(pred.size());
}

/// Mutual information over sqrt(H(pred) H(truth)).
inline double nmi(std::span<const int> pred, std::span<const int> truth) {
    const Eigen::MatrixXd c = contingency(pred, truth) / static_cast<double>(pred.size());
    const Eigen::VectorXd pa = c.rowwise().sum();
    const Eigen::VectorXd pb = c.colwise().sum().transpose();
    auto entropy = [](const Eigen::VectorXd& p) {
        double h = 0;
        for (Eigen::Index i = 0; i < p.size(); ++i)
            if (p[i] > 0)
                h -= p[i] * std::log(p[i]);
        return h;
    };
    double mi = 0;
    for (Eigen::Index a = 0; a < c.rows(); ++a)
        for (Eigen::Index b = 0; b < c.cols(); ++b)
            if (c(a, b) > 0)
                mi += c(a, b) * std::log(c(a, b) / (pa[a] * pb[b]));
    const bool trivial_a = (pa.array() > 0).count() <= 1, trivial_b = (pb.array() > 0).count() <= 1;
    if (trivial_a && trivial_b)
        return 1.0; // both partitions are a single cluster
    if (trivial_a || trivial_b)
        return 0.0;
    return std::clamp(mi / std::sqrt(entropy(pa) * entropy(pb)), 0.0, 1.0);
}

/// (1/n) sum over predicted clusters of the largest class overlap.
inline double purity(std::span<const int> pred, std::span<const int> truth) {
    const Eigen::MatrixXd c = contingency(pred, truth);
    return c.rowwise().maxCoeff().sum() / static_cast<double>(pred.size());
}

inline Scores evaluate(std::span<const int> pred, std::span<const int> truth) {
    return {acc(pred, truth), nmi(pred, truth), purity(pred, truth)};
}

} // namespace llmtp::metrics
