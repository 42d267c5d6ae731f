#pragma once

#include <llmtp/error.hpp>
#include <llmtp/kmeans.hpp>
#include <llmtp/parallel.hpp>
#include <llmtp/tensor.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace llmtp {

/// One view: n samples (rows) by d features.
using ViewMatrix = Eigen::MatrixXd;

/// V views over the same n samples, with optional ground-truth labels.
struct MultiViewDataset {
    std::string name;
    std::vector<ViewMatrix> views;
    std::optional<std::vector<int>> labels;

    Index samples() const { return views.empty() ? 0 : views.front().rows(); }
    Index view_count() const { return static_cast<Index>(views.size()); }

    /// Number of classes implied by the labels (max + 1), or 0 without labels.
    int classes() const {
        if (!labels || labels->empty())
            return 0;
        return *std::max_element(labels->begin(), labels->end()) + 1;
    }

    void validate() const {
        if (views.empty())
            throw ShapeMismatch("dataset has no views");
        const Index n = samples();
        for (std::size_t v = 0; v < views.size(); ++v) {
            if (views[v].rows() != n)
                throw ShapeMismatch("view " + std::to_string(v) + " has " +
                                    std::to_string(views[v].rows()) + " rows, expected " +
                                    std::to_string(n));
            if (views[v].cols() < 1)
                throw ShapeMismatch("view " + std::to_string(v) + " has no features");
            if (!views[v].allFinite())
                throw NonFiniteValue("view " + std::to_string(v) + " has non-finite entries");
        }
        if (labels) {
            if (static_cast<Index>(labels->size()) != n)
                throw ShapeMismatch("label count does not match sample count");
            for (int l : *labels)
                if (l < 0)
                    throw ShapeMismatch("labels must be non-negative");
        }
    }
};

/// Sparse row-stochastic n x m graph between samples and anchors.
class AnchorGraph {
public:
    struct Entry {
        Index anchor;
        double weight;
    };

    AnchorGraph(Index n, Index m) : m_(m), rows_(static_cast<std::size_t>(n)) {}

    Index samples() const { return static_cast<Index>(rows_.size()); }
    Index anchors() const { return m_; }
    std::vector<Entry>& row(Index i) { return rows_[static_cast<std::size_t>(i)]; }
    const std::vector<Entry>& row(Index i) const { return rows_[static_cast<std::size_t>(i)]; }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(samples(), m_);
        for (Index i = 0; i < samples(); ++i)
            for (const auto& e : row(i))
                s(i, e.anchor) += e.weight;
        return s;
    }

    /// Rows whose k+1 nearest distances were all tied and got uniform weights.
    std::size_t uniform_fallback_rows = 0;

private:
    Index m_;
    std::vector<std::vector<Entry>> rows_;
};

/// n x m x V tensor whose frontal slice v is the anchor graph of view v.
struct AnchorGraphTensor {
    Tensor3 tensor;

    Index samples() const { return tensor.rows(); }
    Index anchors() const { return tensor.cols(); }
    Index views() const { return tensor.depth(); }
};

struct AnchorOptions {
    /// m = ceil(anchor_rate * n) unless `anchors` is set.
    double anchor_rate = 0.5;
    std::optional<Index> anchors;
    /// Non-zeros per graph row.
    int neighbors = 5;
    bool standardize = true;

    Index anchor_count(Index n) const {
        if (anchors)
            return *anchors;
        if (!(anchor_rate > 0 && anchor_rate <= 1))
            throw InvalidArgument("anchor_rate must lie in (0, 1]");
        return std::clamp<Index>(static_cast<Index>(std::ceil(anchor_rate * static_cast<double>(n) - 1e-9)), 1, n);
    }
};

/// Zero mean, unit variance per column; constant columns become zero.
inline ViewMatrix standardize(const ViewMatrix& x) {
    ViewMatrix out = x.rowwise() - x.colwise().mean();
    for (Index j = 0; j < out.cols(); ++j) {
        const double sd = std::sqrt(out.col(j).squaredNorm() / static_cast<double>(out.rows()));
        if (sd > 1e-12)
            out.col(j) /= sd;
        else
            out.col(j).setZero();
    }
    return out;
}

/// m anchors from k-means++ / Lloyd on the rows of a view.
inline Eigen::MatrixXd select_anchors(const ViewMatrix& view, Index m, std::uint64_t seed) {
    if (m < 1 || m > view.rows())
        throw InvalidArgument("select_anchors: need 1 <= m <= n");
    KMeansOptions opt;
    opt.seed = seed;
    opt.max_iter = 100;
    opt.tol = 1e-6;
    return kmeans(view, static_cast<int>(m), opt).centroids;
}

/// Adaptive-neighbour weights on the k nearest anchors:
/// s_j = (d_{k+1} - d_j) / (k d_{k+1} - sum_{j<=k} d_j).
inline AnchorGraph build_anchor_graph(const ViewMatrix& view, const Eigen::MatrixXd& anchors,
                                      int k) {
    const Index n = view.rows(), m = anchors.rows();
    if (view.cols() != anchors.cols())
        throw DimensionMismatch("anchors and samples have different feature dimensions");
    if (k < 1 || k >= m)
        throw InvalidArgument("build_anchor_graph: need 1 <= k < m (k=" + std::to_string(k) +
                              ", m=" + std::to_string(m) + ")");
    AnchorGraph g(n, m);
    std::vector<int> tied(static_cast<std::size_t>(n), 0);
    parallel_for(n, [&](Index i) {
        Eigen::VectorXd d = (anchors.rowwise() - view.row(i)).rowwise().squaredNorm();
        std::vector<Index> order(static_cast<std::size_t>(m));
        std::iota(order.begin(), order.end(), Index{0});
        std::partial_sort(order.begin(), order.begin() + k + 1, order.end(),
                          [&](Index a, Index b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
        const double dk1 = d[order[static_cast<std::size_t>(k)]];
        double head = 0;
        for (int j = 0; j < k; ++j)
            head += d[order[static_cast<std::size_t>(j)]];
        const double denom = k * dk1 - head;
        auto& row = g.row(i);
        row.reserve(static_cast<std::size_t>(k));
        if (denom < 1e-12) {
            tied[static_cast<std::size_t>(i)] = 1;
            for (int j = 0; j < k; ++j)
                row.push_back({order[static_cast<std::size_t>(j)], 1.0 / k});
            return;
        }
        for (int j = 0; j < k; ++j) {
            const Index a = order[static_cast<std::size_t>(j)];
            const double w = (dk1 - d[a]) / denom;
            if (w > 0)
                row.push_back({a, w});
        }
    });
    g.uniform_fallback_rows =
        static_cast<std::size_t>(std::count(tied.begin(), tied.end(), 1));
    return g;
}

inline AnchorGraphTensor stack_anchor_tensor(std::span<const AnchorGraph> graphs) {
    if (graphs.empty())
        throw InvalidArgument("stack_anchor_tensor: no graphs");
    std::vector<Eigen::MatrixXd> slices;
    slices.reserve(graphs.size());
    for (const auto& g : graphs) {
        if (g.samples() != graphs.front().samples() || g.anchors() != graphs.front().anchors())
            throw DimensionMismatch("anchor graphs differ in sample or anchor count");
        slices.push_back(g.dense());
    }
    return {Tensor3(std::move(slices))};
}

/// Standardize, select anchors and build the graph for every view.
inline AnchorGraphTensor build_anchor_tensor(const MultiViewDataset& data,
                                             const AnchorOptions& opt, std::uint64_t seed) {
    data.validate();
    const Index m = opt.anchor_count(data.samples());
    std::vector<AnchorGraph> graphs(data.views.size(), AnchorGraph(0, m));
    parallel_for(data.view_count(), [&](Index v) {
        const auto& raw = data.views[static_cast<std::size_t>(v)];
        const ViewMatrix x = opt.standardize ? standardize(raw) : raw;
        graphs[static_cast<std::size_t>(v)] =
            build_anchor_graph(x, select_anchors(x, m, seed), opt.neighbors);
    });
    return stack_anchor_tensor(graphs);
}

} // namespace llmtp
