// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any gating criterion fails.
//
//   acceptance <path-to-llmtp-cli>
//
// Set LLMTP_MSRC_MANIFEST to a manifest of the MSRC dataset to get the
// (non-gating) MSRC report.

#include "oracles.hpp"

#include <llmtp/llmtp.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace llmtp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
    std::printf("%s  %d. %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

/// Runs a criterion body, turning an escaped exception into a failure line.
void criterion(int id, const std::string& title, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, title, std::string("exception: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

void prox_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(101);
    double worst_gap = 0;
    int cases = 0;
    for (int t = 0; t < 50; ++t) {
        const Tensor3 z = oracle::random_tensor(2, 2, 2, rng);
        for (double p : {0.3, 0.5, 0.8, 1.0})
            for (double tau : {0.1, 0.5}) {
                const double ours = oracle::prox_objective(schatten_prox(z, tau, p), z, tau, p);
                const double numeric = oracle::prox_numeric_min(z, tau, p, rng);
                worst_gap = std::max(worst_gap, std::abs(ours - numeric));
                ++cases;
            }
    }
    double worst_svt = 0;
    for (int t = 0; t < 50; ++t) {
        const Tensor3 z = oracle::random_tensor(5, 4, 1, rng);
        const double tau = 0.1 + 0.05 * t;
        worst_svt = std::max(worst_svt, (schatten_prox(z, tau, 1.0).slice(0) - oracle::matrix_svt(z.slice(0), tau))
                                            .cwiseAbs()
                                            .maxCoeff());
    }
    const double secs = seconds_since(start);
    report(1, worst_gap <= 1e-3 && worst_svt <= 1e-8 && secs < 60, "prox oracle equivalence",
           fmt("%d cases, max |objective gap| %.2e (<= 1e-3); depth-1 SVT max error %.2e (<= 1e-8); %.1fs",
               cases, worst_gap, worst_svt, secs));
}

void gst_correctness() {
    double worst = 0;
    int points = 0, ties = 0;
    for (double p : {0.1, 0.4, 0.7, 0.95})
        for (double tau : {0.05, 0.2, 0.5, 0.8, 1.2})
            for (int s = 1; s <= 10; ++s) {
                const double sigma = 0.3 * s;
                const auto grid = oracle::gst_grid(sigma, tau, p);
                const double x = gst_scalar(sigma, tau, p);
                const double fx = 0.5 * (x - sigma) * (x - sigma) + tau * (x > 0 ? std::pow(x, p) : 0.0);
                ++points;
                if (std::abs(fx - grid.f) <= 1e-9 && std::abs(x - grid.x) > 1e-5) {
                    ++ties; // two global minimizers: either is correct
                    continue;
                }
                worst = std::max(worst, std::abs(x - grid.x));
            }
    bool exact = true;
    for (int s = 0; s <= 40; ++s)
        for (double tau : {0.0, 0.3, 1.0, 2.5}) {
            const double sigma = 0.1 * s;
            exact = exact && gst_scalar(sigma, tau, 1.0) == std::max(sigma - tau, 0.0);
        }
    report(2, worst <= 1e-5 && exact, "GST correctness",
           fmt("%d grid points, max |x - grid| %.2e (<= 1e-5, %d exact ties); p=1 path exact: %s", points,
               worst, ties, exact ? "yes" : "no"));
}

AnchorGraphTensor random_graph(Index n, Index m, Index views, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor3 t(n, m, views);
    for (Index v = 0; v < views; ++v) {
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < m; ++j)
                t(i, j, v) = u(rng);
        t.slice(v) = t.slice(v).array().colwise() / t.slice(v).rowwise().sum().array();
    }
    return {t};
}

Tensor3 random_t_orthonormal(Index rows, Index c, Index views, std::mt19937_64& rng) {
    FreqTensor f(rows, c, views);
    for (Index k = 0; k <= views / 2; ++k) {
        const bool real = k == 0 || 2 * k == views;
        f.slice(k) = real ? oracle::random_orthonormal<Eigen::MatrixXd>(rows, c, rng).cast<cplx>().eval()
                          : oracle::random_orthonormal<Eigen::MatrixXcd>(rows, c, rng);
    }
    for (Index k = views / 2 + 1; k < views; ++k)
        f.slice(k) = f.slice(views - k).conjugate();
    return idft_slices(f);
}

void block_updates() {
    std::mt19937_64 rng(303);
    SolverConfig cfg;
    cfg.normalize_graph = false; // the blocks are checked against the graph exactly as given
    SolverConfig converged = cfg;
    converged.inner_g_iters = 2000;
    converged.inner_g_tol = 1e-13;
    double worst_trace = 0, worst_drop = 0;
    int h_beaten = 0, g_beaten = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index views = 1 + trial % 4;
        const AnchorGraphTensor s = random_graph(8, 6, views, rng);
        const FrequencyWorkspace ws = FrequencyWorkspace::prepare(s, cfg);
        SolverState st;
        st.G = random_t_orthonormal(6, 3, views, rng);
        st.H = random_t_orthonormal(8, 3, views, rng);
        st.Q = oracle::random_tensor(8, 3, views, rng);
        st.J = oracle::random_tensor(8, 3, views, rng);
        st.Y1 = oracle::random_tensor(8, 3, views, rng);
        st.Y2 = oracle::random_tensor(8, 3, views, rng);
        st.mu = 0.5;
        st.rho = 2.0;

        // H-block
        const FreqTensor a = h_update_targets(st, ws);
        update_H(st, ws, cfg);
        const FreqTensor h = oracle::direct_dft(st.H);
        for (Index k = 0; k < views; ++k) {
            const double achieved = (h.slice(k).adjoint() * a.slice(k)).trace().real();
            const double optimum = Eigen::BDCSVD<Eigen::MatrixXcd>(a.slice(k)).singularValues().sum();
            worst_trace = std::max(worst_trace, std::abs(achieved - optimum) / std::max(1.0, optimum));
            for (int c = 0; c < 1000; ++c) {
                const auto r = oracle::random_orthonormal<Eigen::MatrixXcd>(8, 3, rng);
                h_beaten += (r.adjoint() * a.slice(k)).trace().real() > achieved + 1e-12;
            }
        }

        // G-block against the H just computed
        // Monotonicity at the default inner budget, optimality with the inner
        // loop run to convergence.
        SolverState warm = st;
        GpiDiagnostics diag, converged_diag;
        update_G(warm, ws, cfg, &diag);
        update_G(st, ws, converged, &converged_diag);
        for (const auto* d : {&diag, &converged_diag})
            for (const auto& seq : d->objective)
                for (std::size_t i = 1; i < seq.size(); ++i)
                    worst_drop =
                        std::max(worst_drop, (seq[i - 1] - seq[i]) / std::max(1.0, std::abs(seq[i - 1])));
        const FreqTensor g = oracle::direct_dft(st.G);
        for (Index k = 0; k < views; ++k) {
            const auto& sk = ws.S_hat.slice(k);
            const double ours = (sk * g.slice(k) - h.slice(k)).squaredNorm();
            for (int c = 0; c < 1000; ++c) {
                const auto r = oracle::random_orthonormal<Eigen::MatrixXcd>(6, 3, rng);
                g_beaten += (sk * r - h.slice(k)).squaredNorm() < ours - 1e-12;
            }
        }
    }
    report(3, worst_trace <= 1e-8 && worst_drop <= 1e-10 && h_beaten == 0 && g_beaten == 0,
           "block-update optimality",
           fmt("100+100 instances; H trace vs sum of singular values %.1e (<= 1e-8); largest GPI "
               "objective drop %.1e (<= 1e-10 rel); random candidates (GPI run to convergence) better than H: %d, than G: %d",
               worst_trace, std::max(0.0, worst_drop), h_beaten, g_beaten));
}

struct DeskRun {
    int iterations;
    bool converged;
    double seconds;
    metrics::Scores scores;
};

std::vector<DeskRun> desk_scale_runs(double lambda) {
    std::vector<DeskRun> runs;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        io::SyntheticSpec spec; // n=300, K=4, three views
        spec.seed = seed;
        const MultiViewDataset data = io::generate_synthetic(spec);
        PipelineOptions opt;
        opt.anchors.anchors = 30;
        opt.anchors.neighbors = 5;
        opt.solver.lambda = lambda;
        opt.solver.p = 0.9;
        opt.seed = seed;
        const RepetitionResult r = run_pipeline(data, opt).runs.front();
        runs.push_back({r.result.iterations, r.result.converged, r.seconds, *r.result.scores});
    }
    return runs;
}

std::string iteration_list(const std::vector<DeskRun>& runs) {
    std::ostringstream os;
    for (std::size_t i = 0; i < runs.size(); ++i)
        os << (i ? "," : "") << runs[i].iterations << (runs[i].converged ? "" : "*");
    return os.str();
}

metrics::Scores mean_scores(const std::vector<DeskRun>& runs) {
    metrics::Scores m;
    for (const auto& r : runs) {
        m.acc += r.scores.acc / static_cast<double>(runs.size());
        m.nmi += r.scores.nmi / static_cast<double>(runs.size());
        m.purity += r.scores.purity / static_cast<double>(runs.size());
    }
    return m;
}

void desk_scale() {
    std::vector<DeskRun> runs;
    criterion(4, "convergence at desk scale", [&] {
        runs = desk_scale_runs(50.0);
        int within = 0;
        double slowest = 0;
        for (const auto& r : runs) {
            within += r.converged && r.iterations <= 100;
            slowest = std::max(slowest, r.seconds);
        }
        report(4, within == static_cast<int>(runs.size()) && slowest < 30, "convergence at desk scale",
               fmt("lambda=50: %d/10 seeds reach max residual < 1e-3 within 100 iterations (iterations: %s; "
                   "* = hit max_iter); slowest run %.2fs (< 30s)",
                   within, iteration_list(runs).c_str(), slowest));
    });
    criterion(5, "clustering quality", [&] {
        if (runs.empty())
            throw std::runtime_error("desk-scale runs unavailable");
        const auto m = mean_scores(runs);
        report(5, m.acc >= 0.95 && m.nmi >= 0.90 && m.purity >= 0.95, "clustering quality",
               fmt("lambda=50, mean over 10 seeds: ACC %.4f (>= 0.95), NMI %.4f (>= 0.90), Purity %.4f (>= 0.95)",
                   m.acc, m.nmi, m.purity));
    });

    // Context for the two criteria above: the same instance with a small Schatten weight.
    try {
        const auto small = desk_scale_runs(0.1);
        const auto m = mean_scores(small);
        std::printf("INFO  4/5 with lambda=0.1 (not a criterion): iterations %s; mean ACC %.4f, NMI %.4f, "
                    "Purity %.4f\n",
                    iteration_list(small).c_str(), m.acc, m.nmi, m.purity);
    } catch (const std::exception& e) {
        std::printf("INFO  lambda=0.1 context run failed: %s\n", e.what());
    }
}

void msrc_report() {
    const char* manifest = std::getenv("LLMTP_MSRC_MANIFEST");
    if (!manifest || !*manifest) {
        std::printf("SKIP  6. MSRC reproduction (not gating): set LLMTP_MSRC_MANIFEST to an MSRC "
                    "manifest to report ACC with lambda=51, p=0.9, anchor_rate=0.7\n");
        return;
    }
    try {
        const MultiViewDataset data = io::load_dataset(io::DatasetManifest::from_file(manifest));
        PipelineOptions opt;
        opt.solver.lambda = 51;
        opt.solver.p = 0.9;
        opt.anchors.anchor_rate = 0.7;
        opt.repetitions = 10;
        const auto summary = summary_json(run_pipeline(data, opt));
        const double acc = summary["acc"]["mean"].get<double>();
        std::printf("%s  6. MSRC reproduction (not gating): MSRC mean ACC %.4f over 10 seeds "
                    "(stretch target >= 0.90; reference ACC 0.986)\n",
                    acc >= 0.90 ? "PASS" : "INFO", acc);
    } catch (const std::exception& e) {
        std::printf("INFO  6. MSRC reproduction (not gating): could not run: %s\n", e.what());
    }
}

void tensor_suite() {
    const auto start = Clock::now();
    std::mt19937_64 rng(707);
    std::uniform_int_distribution<Index> dim(1, 8);
    double roundtrip = 0, parseval = 0, tsvd = 0, product = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index n1 = dim(rng), n2 = dim(rng), n3 = dim(rng), m = dim(rng);
        const Tensor3 t = oracle::random_tensor(n1, n2, n3, rng);
        const FreqTensor f = dft_slices(t);
        roundtrip = std::max(roundtrip, max_abs_diff(idft_slices(f), t));
        double spectral = 0;
        for (Index k = 0; k < n3; ++k)
            spectral += f.slice(k).squaredNorm();
        parseval = std::max(parseval, std::abs(spectral / static_cast<double>(n3) - t.squared_norm()) /
                                          t.squared_norm());
        const TSvdFactors svd = t_svd(t);
        tsvd = std::max(tsvd, max_abs_diff(t_product(to_signal(svd.U),
                                                     t_product(to_signal(svd.S), t_transpose(to_signal(svd.V)))),
                                           t));
        const Tensor3 b = oracle::random_tensor(n2, m, n3, rng);
        product = std::max(product, max_abs_diff(t_product(t, b), oracle::t_product(t, b)));
    }
    const double secs = seconds_since(start);
    report(7, roundtrip <= 1e-10 && parseval <= 1e-9 && tsvd <= 1e-8 && product <= 1e-8 && secs < 60,
           "tensor-algebra suite",
           fmt("200 random tensors up to 8x8x8: roundtrip %.1e (<= 1e-10), Parseval %.1e rel (<= 1e-9), "
               "t-SVD reconstruction %.1e (<= 1e-8), t-product vs block-circulant %.1e (<= 1e-8); %.1fs",
               roundtrip, parseval, tsvd, product, secs));
}

void metrics_suite() {
    const auto start = Clock::now();
    std::mt19937_64 rng(808);
    std::uniform_int_distribution<int> kd(1, 5), nd(1, 12);
    double worst = 0;
    int instances = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = static_cast<std::size_t>(nd(rng));
        const auto pred = oracle::random_labels(n, kd(rng), rng);
        const auto truth = oracle::random_labels(n, kd(rng), rng);
        const auto s = metrics::evaluate(pred, truth);
        worst = std::max({worst, std::abs(s.acc - oracle::acc(pred, truth)),
                          std::abs(s.nmi - oracle::nmi(pred, truth)),
                          std::abs(s.purity - oracle::purity(pred, truth))});
        ++instances;
    }
    const double secs = seconds_since(start);
    report(8, worst <= 1e-12 && secs < 60, "metrics suite",
           fmt("%d random instances (K <= 5, n <= 12): max deviation from brute force %.1e; %.1fs", instances,
               worst, secs));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void determinism(const std::string& cli) {
    if (cli.empty()) {
        report(9, false, "determinism", "no CLI path given on the command line");
        return;
    }
    const fs::path dir = fs::temp_directory_path() / "llmtp_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto run = [&](const std::string& args) {
        const std::string cmd = "THREADS=2 \"" + cli + "\" " + args + " > \"" + (dir / "log.txt").string() + "\" 2>&1";
        return std::system(cmd.c_str());
    };
    const std::string manifest = (dir / "data" / "manifest.json").string();
    int rc = run("synth --seed 5 --out \"" + (dir / "data").string() + "\"");
    for (const char* out : {"run_a", "run_b"})
        if (rc == 0)
            rc = run("cluster --manifest \"" + manifest + "\" --anchors 30 --seed 3 --repetitions 2 --out \"" +
                     (dir / out).string() + "\"");
    if (rc != 0) {
        report(9, false, "determinism", "CLI failed: " + slurp(dir / "log.txt"));
        return;
    }
    std::string differing;
    for (const char* f : {"labels.csv", "fused_H.csv", "trace.csv", "summary.json"}) {
        const std::string a = slurp(dir / "run_a" / f), b = slurp(dir / "run_b" / f);
        if (a.empty() || a != b)
            differing += std::string(differing.empty() ? "" : ", ") + f;
    }
    report(9, differing.empty(), "determinism",
           differing.empty() ? "two `cluster` runs with seed 3 and THREADS=2 wrote byte-identical labels.csv, "
                               "fused_H.csv, trace.csv and summary.json"
                             : "outputs differ: " + differing);
    fs::remove_all(dir);
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    criterion(1, "prox oracle equivalence", prox_oracle);
    criterion(2, "GST correctness", gst_correctness);
    criterion(3, "block-update optimality", block_updates);
    desk_scale();
    msrc_report();
    criterion(7, "tensor-algebra suite", tensor_suite);
    criterion(8, "metrics suite", metrics_suite);
    criterion(9, "determinism", [&] { determinism(cli); });
    std::printf("%d gating criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
