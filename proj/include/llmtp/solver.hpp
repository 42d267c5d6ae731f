#pragma once

#include <llmtp/anchor.hpp>
#include <llmtp/error.hpp>
#include <llmtp/kmeans.hpp>
#include <llmtp/metrics.hpp>
#include <llmtp/prox.hpp>
#include <llmtp/tensor.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace llmtp {

struct SolverConfig {
    /// Weight of the tensor Schatten p-norm term.
    double lambda = 50;
    double p = 0.9;
    double mu0 = 1e-5;
    double rho0 = 1e-5;
    /// Penalty growth factor per outer iteration.
    double eta = 1.5;
    double penalty_cap = 1e13;
    /// beta = beta_margin * lambda_max(Sbar^H Sbar), per frequency slice.
    double beta_margin = 1.01;
    int inner_g_iters = 5;
    double inner_g_tol = 1e-8;
    /// Stop once max(||H - Q||_inf, ||H - J||_inf) < tol.
    double tol = 1e-3;
    int max_iter = 200;
    std::uint64_t seed = 0;
    /// Project the degree-normalized graph S^(v) D_v^{-1/2} / V instead of S.
    bool normalize_graph = true;

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0) || !std::isfinite(v))
                throw InvalidArgument(std::string("solver config: ") + name + " must be positive");
        };
        if (!(lambda >= 0) || !std::isfinite(lambda))
            throw InvalidArgument("solver config: lambda must be >= 0");
        check_schatten_p(p);
        positive(mu0, "mu0");
        positive(rho0, "rho0");
        positive(eta, "eta");
        positive(penalty_cap, "penalty_cap");
        positive(beta_margin, "beta_margin");
        positive(inner_g_tol, "inner_g_tol");
        positive(tol, "tol");
        if (inner_g_iters < 1)
            throw InvalidArgument("solver config: inner_g_iters must be >= 1");
        if (max_iter < 1)
            throw InvalidArgument("solver config: max_iter must be >= 1");
    }
};

struct ResidualRecord {
    int iter = 0;
    double res_q = 0; // ||H - Q||_inf
    double res_j = 0; // ||H - J||_inf
};

/// ALM variables. G is m x c x V, the rest n x c x V.
struct SolverState {
    Tensor3 G, H, Q, J, Y1, Y2;
    double mu = 0;
    double rho = 0;
    int iter = 0;
    std::vector<ResidualRecord> history;
};

struct ClusteringResult {
    std::vector<int> labels;
    Eigen::MatrixXd fused_H; // n x K, mean of the frontal slices of H
    std::vector<ResidualRecord> trace;
    int iterations = 0;
    bool converged = false;
    std::optional<metrics::Scores> scores;
};

// ---------------------------------------------------------------------------
// Slice-level kernels. Templated on the matrix type so the self-conjugate
// frequency slices run in real arithmetic.

/// Maximizer of Re tr(X^H A) over matrices with orthonormal columns:
/// X = Lambda V^H from the thin SVD A = Lambda Sigma V^H.
template <class Mat>
Mat orthogonal_polar(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Mat x = svd.matrixU() * svd.matrixV().adjoint();
    detail::check_svd_output(x, "orthogonal_polar");
    return x;
}

/// tr(G^H W1 G) + 2 Re tr(G^H W2)
template <class Mat>
double gpi_objective(const Mat& w1, const Mat& w2, const Mat& g) {
    return std::real((g.adjoint() * w1 * g).trace()) +
           2.0 * std::real((g.adjoint() * w2).trace());
}

/// Generalized power iteration for max tr(G^H W1 G) + 2 Re tr(G^H W2) over
/// orthonormal-column G, with W1 Hermitian positive definite. Each step sets
/// G <- polar(W1 G + W2); the objective never decreases.
template <class Mat>
Mat gpi_maximize(const Mat& w1, const Mat& w2, Mat g, int iters, double tol,
                 std::vector<double>* objective = nullptr) {
    if (objective)
        objective->push_back(gpi_objective(w1, w2, g));
    for (int it = 0; it < iters; ++it) {
        Mat next = orthogonal_polar(Mat(w1 * g + w2));
        const double change = (next - g).norm();
        g = std::move(next);
        if (objective)
            objective->push_back(gpi_objective(w1, w2, g));
        if (change < tol)
            break;
    }
    return g;
}

/// Largest eigenvalue of a Hermitian positive semi-definite matrix by power
/// iteration from a fixed pseudo-random start.
template <class Mat>
double top_eigenvalue(const Mat& m, int iters = 100, double tol = 1e-10) {
    using Scalar = typename Mat::Scalar;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> gauss;
    Vec v(m.rows());
    for (Index i = 0; i < v.size(); ++i) {
        if constexpr (std::is_same_v<Scalar, cplx>)
            v[i] = cplx(gauss(rng), gauss(rng));
        else
            v[i] = gauss(rng);
    }
    v.normalize();
    double estimate = 0;
    for (int it = 0; it < iters; ++it) {
        Vec w = m * v;
        const double norm = w.norm();
        if (norm == 0)
            return 0;
        const double prev = estimate;
        estimate = norm;
        v = w / norm;
        if (std::abs(estimate - prev) <= tol * estimate)
            break;
    }
    return estimate;
}

// ---------------------------------------------------------------------------

/// S^(v) D_v^{-1/2} / V with D_v the anchor degrees (column sums) of view v.
/// Every slice then has spectral norm 1/V, so no frequency slice of the
/// result exceeds 1 and the cluster directions sit near singular value 1,
/// which is where the orthonormal fit ||S * G - H|| is tight.
inline Tensor3 normalized_graph(const AnchorGraphTensor& s) {
    Tensor3 out = s.tensor;
    const double views = static_cast<double>(s.views());
    for (Index v = 0; v < out.depth(); ++v) {
        auto& slice = out.slice(v);
        const Eigen::VectorXd degree = slice.colwise().sum().transpose();
        for (Index j = 0; j < slice.cols(); ++j)
            slice.col(j) /= (degree[j] > 0 ? std::sqrt(degree[j]) : 1.0) * views;
    }
    return out;
}

/// Per-run frequency-domain quantities that depend only on S:
/// Sbar_i, beta_i and W1_i = beta_i I - Sbar_i^H Sbar_i.
struct FrequencyWorkspace {
    FreqTensor S_hat;
    std::vector<double> beta;
    std::vector<Eigen::MatrixXcd> W1;

    static FrequencyWorkspace prepare(const AnchorGraphTensor& s, const SolverConfig& cfg) {
        FrequencyWorkspace ws;
        ws.S_hat = dft_slices(cfg.normalize_graph ? normalized_graph(s) : s.tensor);
        const Index n3 = s.views(), m = s.anchors();
        ws.beta.assign(static_cast<std::size_t>(n3), 0.0);
        ws.W1.assign(static_cast<std::size_t>(n3), Eigen::MatrixXcd());
        parallel_for(detail::unique_frequency_count(n3), [&](Index k) {
            const auto& sk = ws.S_hat.slice(k);
            Eigen::MatrixXcd gram = sk.adjoint() * sk;
            if (detail::self_conjugate(k, n3))
                gram = gram.real().cast<cplx>();
            const double beta = cfg.beta_margin * top_eigenvalue(gram) + 1e-12;
            ws.beta[static_cast<std::size_t>(k)] = beta;
            ws.W1[static_cast<std::size_t>(k)] =
                beta * Eigen::MatrixXcd::Identity(m, m) - gram;
        });
        for (Index k = detail::unique_frequency_count(n3); k < n3; ++k) {
            ws.beta[static_cast<std::size_t>(k)] = ws.beta[static_cast<std::size_t>(n3 - k)];
            ws.W1[static_cast<std::size_t>(k)] = ws.W1[static_cast<std::size_t>(n3 - k)].conjugate();
        }
        return ws;
    }

    Index depth() const { return S_hat.depth(); }
};

/// GPI objective sequence of every unique frequency slice in one update_G call.
struct GpiDiagnostics {
    std::vector<std::vector<double>> objective;
};

namespace detail {

inline Tensor3 projection_update(const FrequencyWorkspace& ws, const Tensor3& h,
                                 const Tensor3* g_start, const SolverConfig& cfg,
                                 GpiDiagnostics* diag) {
    const Index n3 = ws.depth();
    const FreqTensor h_hat = dft_slices(h);
    const Index m = ws.S_hat.cols(), c = h.cols();
    std::optional<FreqTensor> g_hat;
    if (g_start)
        g_hat = dft_slices(*g_start);
    if (diag)
        diag->objective.assign(static_cast<std::size_t>(unique_frequency_count(n3)), {});

    FreqTensor out(m, c, n3);
    for_each_unique_frequency(out, [&](Index k) {
        const Eigen::MatrixXcd w2 = ws.S_hat.slice(k).adjoint() * h_hat.slice(k);
        auto* trace = diag ? &diag->objective[static_cast<std::size_t>(k)] : nullptr;
        // Start from the better of the warm start and polar(W2); the latter is
        // already optimal when G is square and is a strong start otherwise.
        auto kernel = [&](const auto& w1, const auto& w2s, const auto& g0) {
            using Mat = std::decay_t<decltype(w1)>;
            Mat start = orthogonal_polar(Mat(w2s));
            if (g_start && gpi_objective(w1, w2s, Mat(g0)) > gpi_objective(w1, w2s, start))
                start = g0;
            return gpi_maximize<Mat>(w1, w2s, std::move(start), cfg.inner_g_iters,
                                     cfg.inner_g_tol, trace);
        };
        const Eigen::MatrixXcd& g0 = g_hat ? g_hat->slice(k) : w2;
        return apply_spectral(self_conjugate(k, n3), kernel, ws.W1[static_cast<std::size_t>(k)],
                              w2, g0);
    });
    return idft_slices(out);
}

} // namespace detail

/// G-block: per frequency slice, GPI on max tr(G^H W1 G) + 2 Re tr(G^H W2)
/// with W2 = Sbar^H Hbar, started from the current G or polar(W2).
inline void update_G(SolverState& st, const FrequencyWorkspace& ws, const SolverConfig& cfg,
                     GpiDiagnostics* diag = nullptr) {
    st.G = detail::projection_update(ws, st.H, &st.G, cfg, diag);
}

/// The A matrices of the H-block, A_i = 2 Sbar_i Gbar_i + mu W3_i + rho W4_i
/// with W3 = Q - Y1/mu and W4 = J - Y2/rho.
inline FreqTensor h_update_targets(const SolverState& st, const FrequencyWorkspace& ws) {
    const Tensor3 w3 = st.Q - st.Y1 * (1.0 / st.mu);
    const Tensor3 w4 = st.J - st.Y2 * (1.0 / st.rho);
    const FreqTensor penalty = dft_slices(w3 * st.mu + w4 * st.rho);
    const FreqTensor g_hat = dft_slices(st.G);
    FreqTensor a(st.H.rows(), st.H.cols(), st.H.depth());
    for (Index k = 0; k < a.depth(); ++k)
        a.slice(k) = 2.0 * ws.S_hat.slice(k) * g_hat.slice(k) + penalty.slice(k);
    return a;
}

/// H-block: per frequency slice, Hbar = Lambda V^H from the thin SVD of A.
inline void update_H(SolverState& st, const FrequencyWorkspace& ws, const SolverConfig&) {
    const FreqTensor a = h_update_targets(st, ws);
    const Index n3 = a.depth();
    FreqTensor h(a.rows(), a.cols(), n3);
    detail::for_each_unique_frequency(h, [&](Index k) {
        return detail::apply_spectral(
            detail::self_conjugate(k, n3), [](const auto& x) { return orthogonal_polar(x); },
            a.slice(k));
    });
    st.H = idft_slices(h);
}

/// Q = max(H + Y1/mu, 0)
inline void update_Q(SolverState& st) {
    if (!(st.mu > 0))
        throw InvalidArgument("update_Q: mu must be positive");
    st.Q = st.H + st.Y1 * (1.0 / st.mu);
    for (Index k = 0; k < st.Q.depth(); ++k)
        st.Q.slice(k) = st.Q.slice(k).cwiseMax(0.0);
}

/// J = prox of (lambda/rho) ||.||_Sp^p at H + Y2/rho.
inline void update_J(SolverState& st, const SolverConfig& cfg) {
    if (!(st.rho > 0))
        throw InvalidArgument("update_J: rho must be positive");
    st.J = schatten_prox(st.H + st.Y2 * (1.0 / st.rho), cfg.lambda / st.rho, cfg.p);
}

inline void update_multipliers(SolverState& st, const SolverConfig& cfg) {
    st.Y1 += (st.H - st.Q) * st.mu;
    st.Y2 += (st.H - st.J) * st.rho;
    st.mu = std::min(cfg.eta * st.mu, cfg.penalty_cap);
    st.rho = std::min(cfg.eta * st.rho, cfg.penalty_cap);
}

inline ResidualRecord residuals(const SolverState& st) {
    return {st.iter, max_abs_diff(st.H, st.Q), max_abs_diff(st.H, st.J)};
}

/// Mean of the frontal slices of H (n x K).
inline Eigen::MatrixXd fuse_label_matrix(const Tensor3& h) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(h.rows(), h.cols());
    for (Index k = 0; k < h.depth(); ++k)
        sum += h.slice(k);
    return sum / static_cast<double>(h.depth());
}

/// Row-wise argmax of a label matrix; ties go to the lowest column.
inline std::vector<int> row_argmax(const Eigen::MatrixXd& m) {
    std::vector<int> labels(static_cast<std::size_t>(m.rows()), 0);
    for (Index i = 0; i < m.rows(); ++i) {
        Index best = 0;
        for (Index j = 1; j < m.cols(); ++j)
            if (m(i, j) > m(i, best))
                best = j;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

inline std::vector<int> fuse_labels(const Tensor3& h) { return row_argmax(fuse_label_matrix(h)); }

/// Column-normalized one-hot indicator (n x k).
inline Eigen::MatrixXd normalized_indicator(const std::vector<int>& labels, int k) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Index>(labels.size()), k);
    for (std::size_t i = 0; i < labels.size(); ++i)
        y(static_cast<Index>(i), labels[i]) = 1.0;
    for (Index j = 0; j < k; ++j)
        if (const double norm = y.col(j).norm(); norm > 0)
            y.col(j) /= norm;
    return y;
}

/// Starting point of the ALM loop. A consensus partition P is taken from
/// k-means on the rows of [S^(1), ..., S^(V)]; H holds its normalized
/// indicator in frontal slice 0 and zeros elsewhere, so every frequency slice
/// of H equals P and H is both non-negative and t-orthonormal.
/// Q = J = H, Y1 = Y2 = 0, and G comes from one G-block solve against H.
inline SolverState initialize_state(const AnchorGraphTensor& s, int k, const SolverConfig& cfg,
                                    const FrequencyWorkspace& ws) {
    const Index n = s.samples(), m = s.anchors(), views = s.views();
    Eigen::MatrixXd joined(n, m * views);
    for (Index v = 0; v < views; ++v)
        joined.middleCols(v * m, m) = s.tensor.slice(v);
    KMeansOptions opt;
    opt.seed = cfg.seed;
    opt.restarts = 10;
    const auto partition = kmeans(joined, k, opt).labels;

    SolverState st;
    st.H = Tensor3(n, k, views);
    st.H.slice(0) = normalized_indicator(partition, k);
    st.Q = st.H;
    st.J = st.H;
    st.Y1 = Tensor3::zeros(st.H.dims());
    st.Y2 = Tensor3::zeros(st.H.dims());
    st.mu = cfg.mu0;
    st.rho = cfg.rho0;
    st.G = detail::projection_update(ws, st.H, nullptr, cfg, nullptr);
    return st;
}

/// Called after every outer iteration with its residuals and the state.
using IterationObserver = std::function<void(const ResidualRecord&, const SolverState&)>;

/// Runs the four-block ALM loop on anchor graph tensor S for K clusters.
inline ClusteringResult run_llmtp(const AnchorGraphTensor& s, int k, const SolverConfig& cfg,
                                  const IterationObserver& observer = {}) {
    cfg.validate();
    if (k < 2)
        throw InvalidArgument("run_llmtp: need at least 2 clusters");
    if (s.anchors() < k)
        throw DimensionMismatch("run_llmtp: anchor count m=" + std::to_string(s.anchors()) +
                                " is smaller than K=" + std::to_string(k));
    if (s.samples() < k)
        throw DimensionMismatch("run_llmtp: fewer samples than clusters");

    const FrequencyWorkspace ws = FrequencyWorkspace::prepare(s, cfg);
    SolverState st = initialize_state(s, k, cfg, ws);

    ClusteringResult result;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        st.iter = it;
        update_G(st, ws, cfg);
        update_H(st, ws, cfg);
        update_Q(st);
        update_J(st, cfg);
        const ResidualRecord r = residuals(st);
        update_multipliers(st, cfg);
        st.history.push_back(r);
        if (observer)
            observer(r, st);
        if (std::max(r.res_q, r.res_j) < cfg.tol) {
            result.converged = true;
            break;
        }
    }
    result.iterations = st.iter;
    result.trace = st.history;
    result.fused_H = fuse_label_matrix(st.H);
    result.labels = row_argmax(result.fused_H);
    return result;
}

} // namespace llmtp
