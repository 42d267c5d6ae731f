#pragma once

#include <llmtp/anchor.hpp>
#include <llmtp/error.hpp>
#include <llmtp/io.hpp>
#include <llmtp/metrics.hpp>
#include <llmtp/solver.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace llmtp {

/// An upstream failure tagged with the pipeline stage it came from.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct PipelineOptions {
    SolverConfig solver;
    AnchorOptions anchors;
    /// Independent trials; trial r uses seed + r for anchors and initialization.
    int repetitions = 1;
    /// Cluster count; inferred from the labels when unset.
    std::optional<int> clusters;
    std::uint64_t seed = 0;
};

struct RepetitionResult {
    std::uint64_t seed = 0;
    ClusteringResult result;
    /// ACC after every outer iteration (empty without labels).
    std::vector<double> acc_trace;
    double seconds = 0;
};

struct PipelineReport {
    std::string dataset;
    int clusters = 0;
    std::vector<RepetitionResult> runs;

    bool all_converged() const {
        for (const auto& r : runs)
            if (!r.result.converged)
                return false;
        return true;
    }
};

namespace detail {

template <class F>
decltype(auto) stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

/// Mean and sample (n - 1) variance; variance is 0 for a single value.
inline std::pair<double, double> mean_variance(const std::vector<double>& x) {
    if (x.empty())
        return {0, 0};
    double mean = 0;
    for (double v : x)
        mean += v;
    mean /= static_cast<double>(x.size());
    if (x.size() < 2)
        return {mean, 0};
    double ss = 0;
    for (double v : x)
        ss += (v - mean) * (v - mean);
    return {mean, ss / static_cast<double>(x.size() - 1)};
}

} // namespace detail

inline int resolve_clusters(const MultiViewDataset& data, const PipelineOptions& opt) {
    if (opt.clusters)
        return *opt.clusters;
    if (const int k = data.classes(); k > 0)
        return k;
    throw InvalidArgument("cluster count is required when the dataset has no labels");
}

/// Standardize -> anchors -> graphs -> tensor -> solver -> metrics, once per
/// repetition. Repetitions run one after another so the timings stay clean.
inline PipelineReport run_pipeline(const MultiViewDataset& data, const PipelineOptions& opt) {
    detail::stage("input", [&] {
        data.validate();
        opt.solver.validate();
        if (opt.repetitions < 1)
            throw InvalidArgument("repetitions must be >= 1");
    });
    PipelineReport report;
    report.dataset = data.name;
    report.clusters = detail::stage("input", [&] { return resolve_clusters(data, opt); });

    for (int r = 0; r < opt.repetitions; ++r) {
        RepetitionResult rep;
        rep.seed = opt.seed + static_cast<std::uint64_t>(r);
        const auto start = std::chrono::steady_clock::now();

        const AnchorGraphTensor s = detail::stage(
            "anchor graph", [&] { return build_anchor_tensor(data, opt.anchors, rep.seed); });

        SolverConfig cfg = opt.solver;
        cfg.seed = rep.seed;
        IterationObserver observer;
        if (data.labels) {
            observer = [&](const ResidualRecord&, const SolverState& st) {
                rep.acc_trace.push_back(metrics::acc(fuse_labels(st.H), *data.labels));
            };
        }
        rep.result = detail::stage("solver", [&] { return run_llmtp(s, report.clusters, cfg, observer); });
        if (data.labels)
            rep.result.scores = detail::stage(
                "metrics", [&] { return metrics::evaluate(rep.result.labels, *data.labels); });

        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.runs.push_back(std::move(rep));
    }
    return report;
}

/// Mean and variance of every metric plus iteration counts. Timings are left
/// out so the file is reproducible.
inline nlohmann::json summary_json(const PipelineReport& report) {
    auto stat = [](const std::vector<double>& x) {
        const auto [mean, variance] = detail::mean_variance(x);
        return nlohmann::json{{"mean", mean}, {"variance", variance}, {"values", x}};
    };
    std::vector<double> acc, nmi, purity, iterations;
    int converged = 0;
    for (const auto& r : report.runs) {
        iterations.push_back(r.result.iterations);
        converged += r.result.converged ? 1 : 0;
        if (r.result.scores) {
            acc.push_back(r.result.scores->acc);
            nmi.push_back(r.result.scores->nmi);
            purity.push_back(r.result.scores->purity);
        }
    }
    nlohmann::json j{{"dataset", report.dataset},
                     {"clusters", report.clusters},
                     {"repetitions", report.runs.size()},
                     {"converged", converged},
                     {"iterations", stat(iterations)}};
    if (!acc.empty()) {
        j["acc"] = stat(acc);
        j["nmi"] = stat(nmi);
        j["purity"] = stat(purity);
    }
    return j;
}

/// labels.csv, fused_H.csv and trace.csv of the first repetition, plus
/// summary.json over all of them.
inline void write_pipeline_outputs(const PipelineReport& report, const std::filesystem::path& dir) {
    if (report.runs.empty())
        throw InvalidArgument("write_pipeline_outputs: empty report");
    std::filesystem::create_directories(dir);
    const auto& first = report.runs.front();
    io::write_labels_csv(dir / "labels.csv", first.result.labels);
    io::write_matrix(dir / "fused_H.csv", first.result.fused_H);
    io::write_trace_csv(dir / "trace.csv", first.result.trace, first.acc_trace);
    auto out = io::open_output(dir / "summary.json");
    out << summary_json(report).dump(2) << '\n';
}

// ---------------------------------------------------------------------------

enum class SweepParameter { AnchorRate, P, Lambda };

inline SweepParameter parse_sweep_parameter(const std::string& name) {
    if (name == "anchor_rate")
        return SweepParameter::AnchorRate;
    if (name == "p")
        return SweepParameter::P;
    if (name == "lambda")
        return SweepParameter::Lambda;
    throw InvalidArgument("unknown sweep parameter '" + name + "' (anchor_rate | p | lambda)");
}

struct SweepSpec {
    SweepParameter parameter = SweepParameter::AnchorRate;
    std::vector<double> values;
    int repetitions = 10;

    void validate() const {
        if (values.empty())
            throw InvalidArgument("sweep needs at least one value");
        if (repetitions < 1)
            throw InvalidArgument("sweep repetitions must be >= 1");
        for (double v : values) {
            const bool ok = parameter == SweepParameter::AnchorRate ? (v > 0 && v <= 1)
                            : parameter == SweepParameter::P        ? (v > 0 && v <= 1)
                                                                    : (v >= 0 && std::isfinite(v));
            if (!ok)
                throw InvalidArgument("sweep value " + std::to_string(v) + " is out of range");
        }
    }
};

struct SweepRow {
    double value = 0;
    int rep = 0;
    metrics::Scores scores;
    double seconds = 0;
};

inline PipelineOptions with_sweep_value(PipelineOptions opt, SweepParameter param, double value) {
    switch (param) {
    case SweepParameter::AnchorRate:
        opt.anchors.anchor_rate = value;
        opt.anchors.anchors.reset();
        break;
    case SweepParameter::P:
        opt.solver.p = value;
        break;
    case SweepParameter::Lambda:
        opt.solver.lambda = value;
        break;
    }
    return opt;
}

/// One pipeline run of `repetitions` trials per value. Requires labels.
inline std::vector<SweepRow> run_sweep(const MultiViewDataset& data, const PipelineOptions& base,
                                       const SweepSpec& sweep) {
    sweep.validate();
    if (!data.labels)
        throw InvalidArgument("sweep needs ground-truth labels");
    std::vector<SweepRow> rows;
    for (double value : sweep.values) {
        PipelineOptions opt = with_sweep_value(base, sweep.parameter, value);
        opt.repetitions = sweep.repetitions;
        const PipelineReport report = run_pipeline(data, opt);
        for (std::size_t r = 0; r < report.runs.size(); ++r)
            rows.push_back({value, static_cast<int>(r), *report.runs[r].result.scores,
                            report.runs[r].seconds});
    }
    return rows;
}

inline void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    auto out = io::open_output(path);
    out << "value,rep,acc,nmi,purity,seconds\n";
    for (const auto& r : rows)
        out << io::format_double(r.value) << ',' << r.rep << ',' << io::format_double(r.scores.acc)
            << ',' << io::format_double(r.scores.nmi) << ',' << io::format_double(r.scores.purity)
            << ',' << io::format_double(r.seconds) << '\n';
}

} // namespace llmtp
