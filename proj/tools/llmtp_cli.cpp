// llmtp: cluster, synth, sweep and eval subcommands.
//
// Exit codes: 0 success, 1 runtime failure, 2 command-line or input parse
// error, 3 solver did not converge (only with --strict).

#include <llmtp/llmtp.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace llmtp;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitParse = 2;
constexpr int kExitNotConverged = 3;

struct RunArgs {
    fs::path manifest;
    PipelineOptions opt;
    std::optional<Index> anchors;
    bool no_standardize = false;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
    cmd->add_option("--manifest", a.manifest, "Dataset manifest (JSON)")->required();
    auto& s = a.opt.solver;
    cmd->add_option("--lambda", s.lambda, "Schatten p-norm weight")->capture_default_str();
    cmd->add_option("--p", s.p, "Schatten exponent in (0, 1]")->capture_default_str();
    cmd->add_option("--mu0", s.mu0)->capture_default_str();
    cmd->add_option("--rho0", s.rho0)->capture_default_str();
    cmd->add_option("--eta", s.eta, "Penalty growth factor")->capture_default_str();
    cmd->add_option("--penalty_cap", s.penalty_cap)->capture_default_str();
    cmd->add_option("--beta_margin", s.beta_margin)->capture_default_str();
    cmd->add_option("--inner_g_iters", s.inner_g_iters)->capture_default_str();
    cmd->add_option("--inner_g_tol", s.inner_g_tol)->capture_default_str();
    cmd->add_option("--tol", s.tol, "Residual stopping threshold")->capture_default_str();
    cmd->add_option("--max_iter", s.max_iter)->capture_default_str();
    cmd->add_option("--normalize_graph", s.normalize_graph,
                    "Degree-normalize the anchor graphs inside the solver")
        ->capture_default_str();
    cmd->add_option("--seed", a.opt.seed, "Base seed; repetition r uses seed + r")
        ->capture_default_str();
    cmd->add_option("--anchor_rate", a.opt.anchors.anchor_rate, "m = ceil(rate * n)")
        ->capture_default_str();
    cmd->add_option("--anchors", a.anchors, "Anchor count (overrides --anchor_rate)");
    cmd->add_option("--neighbors", a.opt.anchors.neighbors, "Non-zeros per graph row")
        ->capture_default_str();
    cmd->add_flag("--no_standardize", a.no_standardize, "Skip per-view standardization");
    cmd->add_option("--clusters", a.opt.clusters, "Cluster count (default: from labels)");
}

void finish_run_options(RunArgs& a) {
    if (a.anchors)
        a.opt.anchors.anchors = *a.anchors;
    a.opt.anchors.standardize = !a.no_standardize;
}

MultiViewDataset load(const fs::path& manifest) {
    return io::load_dataset(io::DatasetManifest::from_file(manifest));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view clustering by tensor projection"};
    app.require_subcommand(1);

    RunArgs cluster_args;
    fs::path cluster_out = ".";
    bool strict = false;
    auto* cluster = app.add_subcommand("cluster", "Cluster a dataset and write labels, fused H, trace and summary");
    add_run_options(cluster, cluster_args);
    cluster->add_option("--repetitions", cluster_args.opt.repetitions)->capture_default_str();
    cluster->add_option("--out", cluster_out, "Output directory")->capture_default_str();
    cluster->add_flag("--strict", strict, "Exit with code 3 if any repetition does not converge");

    io::SyntheticSpec synth_spec;
    fs::path synth_out;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-view Gaussian dataset");
    synth->add_option("--seed", synth_seed)->required();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--samples", synth_spec.samples)->capture_default_str();
    synth->add_option("--clusters", synth_spec.clusters)->capture_default_str();
    synth->add_option("--dims", synth_spec.dims, "Feature dimension of each view")
        ->capture_default_str();
    synth->add_option("--separation", synth_spec.separation)->capture_default_str();
    synth->add_option("--noise", synth_spec.noise)->capture_default_str();

    RunArgs sweep_args;
    std::string sweep_param;
    SweepSpec sweep_spec;
    fs::path sweep_out = "sweep.csv";
    auto* sweep = app.add_subcommand("sweep", "Repeat clustering over a range of one hyperparameter");
    add_run_options(sweep, sweep_args);
    sweep->add_option("--param", sweep_param, "anchor_rate | p | lambda")
        ->required()
        ->check(CLI::IsMember({"anchor_rate", "p", "lambda"}));
    sweep->add_option("--values", sweep_spec.values)->required();
    sweep->add_option("--repetitions", sweep_spec.repetitions)->capture_default_str();
    sweep->add_option("--out", sweep_out, "Output CSV")->capture_default_str();

    fs::path eval_pred, eval_truth;
    auto* eval = app.add_subcommand("eval", "Score predicted labels against ground truth");
    eval->add_option("--pred", eval_pred, "Predicted labels (labels.csv or one per line)")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--truth", eval_truth, "Ground-truth labels")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    try {
        if (*cluster) {
            finish_run_options(cluster_args);
            const MultiViewDataset data = load(cluster_args.manifest);
            const PipelineReport report = run_pipeline(data, cluster_args.opt);
            write_pipeline_outputs(report, cluster_out);
            for (const auto& r : report.runs) {
                std::cout << "seed " << r.seed << ": " << r.result.iterations << " iterations"
                          << (r.result.converged ? "" : " (not converged)");
                if (r.result.scores)
                    std::cout << ", acc " << r.result.scores->acc << ", nmi " << r.result.scores->nmi
                              << ", purity " << r.result.scores->purity;
                std::cout << '\n';
            }
            if (strict && !report.all_converged()) {
                std::cerr << "error: solver did not converge within max_iter\n";
                return kExitNotConverged;
            }
        } else if (*synth) {
            synth_spec.seed = synth_seed;
            MultiViewDataset data = io::generate_synthetic(synth_spec);
            fs::create_directories(synth_out);
            io::write_dataset(data, synth_out);
            std::cout << "wrote " << (synth_out / "manifest.json").string() << '\n';
        } else if (*sweep) {
            finish_run_options(sweep_args);
            sweep_spec.parameter = parse_sweep_parameter(sweep_param);
            const MultiViewDataset data = load(sweep_args.manifest);
            write_sweep_csv(sweep_out, run_sweep(data, sweep_args.opt, sweep_spec));
            std::cout << "wrote " << sweep_out.string() << '\n';
        } else if (*eval) {
            const auto pred = io::read_labels(eval_pred);
            const auto truth = io::read_labels(eval_truth);
            const auto s = metrics::evaluate(pred, truth);
            std::cout << nlohmann::json{{"acc", s.acc}, {"nmi", s.nmi}, {"purity", s.purity}}.dump(2)
                      << '\n';
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return 0;
}
