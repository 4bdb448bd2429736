// fmsync command line harness: problem generation, estimation, posterior
// sampling, grid sweeps, and table aggregation.
//
// Exit codes: 0 success, 1 validation error, 2 partial failure (manifest
// written), 3 I/O error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmsync/fmsync.hpp>

namespace fs = std::filesystem;
using namespace fmsync;

namespace {

struct PartialFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fixed_token(double value, int scale, int width) {
    const long v = std::lround(value * scale);
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

std::string problem_filename(const ExperimentConfig& cfg, int density_idx, std::uint64_t seed) {
    return "problem_n" + std::to_string(cfg.n) + "_ns" + std::to_string(cfg.num_nodes) + "_d" +
           fixed_token(cfg.densities[density_idx], 1000, 4) + "_seed" + std::to_string(seed) + ".json";
}

// config file + flag overrides + OUTPUT_DIR, in increasing precedence
struct ConfigCli {
    std::string config_path;
    std::optional<int> n, nodes, samples, burn_in, restarts, workers;
    std::optional<double> step_size, beta;
    std::vector<double> densities, sigmas;
    std::vector<std::string> estimators;
    std::vector<std::uint64_t> seeds;
    std::optional<std::string> out;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON experiment config file");
        app->add_option("--n", n, "basis size (matrix dimension)");
        app->add_option("--nodes", nodes, "number of shapes N_s");
        app->add_option("--density", densities, "edge density grid");
        app->add_option("--sigma2", sigmas, "noise variance grid");
        app->add_option("--estimator", estimators, "estimators to run");
        app->add_option("--seed", seeds, "replicate seeds");
        app->add_option("--samples", samples, "posterior samples per chain");
        app->add_option("--step-size", step_size, "Langevin step size h");
        app->add_option("--beta", beta, "inverse temperature");
        app->add_option("--burn-in", burn_in, "discarded warm-up steps");
        app->add_option("--restarts", restarts, "optimizer restarts");
        app->add_option("--workers", workers, "worker threads (0 = hardware)");
        app->add_option("--out", out, "output directory");
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = experiment_config_from_json(read_json_file(config_path));
        if (const char* env = std::getenv("OUTPUT_DIR")) cfg.output_dir = env;
        if (n) cfg.n = *n;
        if (nodes) cfg.num_nodes = *nodes;
        if (!densities.empty()) cfg.densities = densities;
        if (!sigmas.empty()) cfg.sigmas2 = sigmas;
        if (!estimators.empty()) cfg.estimators = estimators;
        if (!seeds.empty()) cfg.seeds = seeds;
        if (samples) cfg.sampler.num_samples = *samples;
        if (step_size) cfg.sampler.step_size = *step_size;
        if (beta) cfg.sampler.beta = *beta;
        if (burn_in) cfg.sampler.burn_in = *burn_in;
        if (restarts) cfg.optimizer.restarts = *restarts;
        if (workers) cfg.num_workers = *workers;
        if (out) cfg.output_dir = *out;
        cfg.validate();
        return cfg;
    }
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

int cmd_generate(const ConfigCli& cli) {
    const ExperimentConfig cfg = cli.resolve();
    const fs::path dir = fs::path(cfg.output_dir) / "problems";
    ensure_dir(dir);
    const json echo = experiment_config_to_json(cfg);
    for (size_t di = 0; di < cfg.densities.size(); ++di) {
        for (size_t si = 0; si < cfg.seeds.size(); ++si) {
            const ProblemInstance inst =
                fmsync::detail::make_instance(cfg, static_cast<int>(di), static_cast<int>(si));
            write_json_file((dir / problem_filename(cfg, static_cast<int>(di), cfg.seeds[si])).string(),
                            problem_to_json(inst, echo));
        }
    }
    std::cout << "wrote " << cfg.densities.size() * cfg.seeds.size() << " problem files to " << dir
              << "\n";
    return 0;
}

const ObservationSet& pick_observations(const ProblemInstance& inst, double sigma2) {
    for (const auto& obs : inst.corrupted)
        if (std::abs(obs.sigma2 - sigma2) < 1e-12) return obs;
    throw ValidationError("problem file has no corrupted set with sigma2 = " +
                          fmsync::detail::format_double(sigma2));
}

json uq_to_json(const UQReport& uq) {
    json nodes = json::array();
    for (const auto& node : uq.per_node)
        nodes.push_back(json{{"oracle_accuracy", node.oracle_accuracy},
                             {"mean_entry_stddev", node.entry_stddev.mean()},
                             {"mean_map", matrix_to_json(node.mean_map.matrix())}});
    return json{{"num_samples_used", uq.num_samples_used}, {"per_node", std::move(nodes)}};
}

int cmd_estimate(const std::string& problem_path, const ConfigCli& cli) {
    const ExperimentConfig cfg = cli.resolve();
    if (cli.estimators.size() != 1)
        throw ValidationError("estimate: exactly one --estimator is required");
    const std::string estimator = cli.estimators[0];
    std::vector<double> sigmas = cli.sigmas;
    estimator_tag(estimator);
    const ProblemInstance inst = problem_from_json(read_json_file(problem_path));
    ensure_dir(cfg.output_dir);
    const json echo = experiment_config_to_json(cfg);

    if (sigmas.empty())
        for (const auto& obs : inst.corrupted) sigmas.push_back(obs.sigma2);

    std::vector<CellResult> rows;
    std::vector<std::string> failures;
    for (double sigma2 : sigmas) {
        try {
            const ObservationSet& obs = pick_observations(inst, sigma2);
            int sigma_idx = 0;
            for (size_t c = 0; c < inst.corrupted.size(); ++c)
                if (std::abs(inst.corrupted[c].sigma2 - sigma2) < 1e-12)
                    sigma_idx = static_cast<int>(c);
            const std::uint64_t seed =
                derive_seed(inst.seed, static_cast<std::uint64_t>(sigma_idx),
                            static_cast<std::uint64_t>(estimator_tag(estimator)));
            // graph density of the instance, for the CSV row
            const double density = static_cast<double>(obs.graph.num_edges()) /
                                   (obs.graph.num_nodes() * (obs.graph.num_nodes() - 1) / 2.0);

            json result;
            result["format_version"] = kFormatVersion;
            result["config"] = echo;
            result["estimator"] = estimator;
            result["sigma2"] = sigma2;
            CellResult row{estimator, density, sigma2, inst.seed, 0.0, 0.0};

            if (estimator == "MLE1" || estimator == "MLE2") {
                const auto mr = multi_restart(
                    obs, estimator == "MLE1" ? Estimator::Mle1 : Estimator::Mle2,
                    cfg.optimizer.restarts, seed, cfg.optimizer, &inst.ground_truth);
                row.mean_dist = evaluate_estimate(mr.state, inst.ground_truth);
                row.mean_dist_sq = evaluate_estimate_squared(mr.state, inst.ground_truth);
                result["aggregate_maps"] = absolute_state_to_json(mr.state);
                json runs = json::array();
                for (const auto& run : mr.runs) runs.push_back(estimate_result_to_json(run));
                result["runs"] = std::move(runs);
            } else {
                const auto warm = multi_restart(obs, Estimator::Mle2, cfg.optimizer.restarts,
                                                derive_seed(seed, static_cast<std::uint64_t>(0xaa)),
                                                cfg.optimizer);
                SamplerConfig chain_cfg = cfg.sampler;
                chain_cfg.seed = seed;
                chain_cfg.energy.variant = estimator == "MC2-riem" ? CostVariant::RiemannianCost
                                                                   : CostVariant::EuclideanCost;
                const SampleSet set = run_chain(obs, warm.state, chain_cfg);
                const auto mean = posterior_mean(
                    set, estimator == "MC1" ? MeanKind::ProjectedEuclidean : MeanKind::Frechet);
                const UQReport uq = build_uq_report(set, inst.ground_truth_state);
                row.mean_dist = evaluate_estimate(mean, inst.ground_truth);
                row.mean_dist_sq = evaluate_estimate_squared(mean, inst.ground_truth);
                double acc = 0.0, spread = 0.0;
                for (const auto& node : uq.per_node) {
                    acc += node.oracle_accuracy;
                    spread += node.entry_stddev.mean();
                }
                row.oracle_acc = acc / static_cast<double>(uq.per_node.size());
                row.mean_entry_spread = spread / static_cast<double>(uq.per_node.size());
                result["posterior_mean"] = absolute_state_to_json(mean);
                result["sampler"] = sampler_config_to_json(chain_cfg);
                result["energy_trace"] = set.energy_trace;
                result["uq"] = uq_to_json(uq);
            }
            result["mean_dist"] = row.mean_dist;
            result["mean_dist_sq"] = row.mean_dist_sq;
            rows.push_back(row);
            const std::string stem = "estimate_" + estimator + "_s" + fixed_token(sigma2, 100, 3) +
                                     "_seed" + std::to_string(inst.seed);
            write_json_file((fs::path(cfg.output_dir) / (stem + ".json")).string(), result);
        } catch (const std::exception& ex) {
            failures.push_back(estimator + " sigma2=" + fmsync::detail::format_double(sigma2) + ": " +
                               ex.what());
            std::cerr << "cell failed: " << failures.back() << "\n";
        }
    }
    write_results_csv((fs::path(cfg.output_dir) / "results.csv").string(), rows, echo);
    if (!failures.empty()) {
        write_json_file((fs::path(cfg.output_dir) / "failures.json").string(),
                        json{{"format_version", kFormatVersion}, {"failures", failures}});
        return 2;
    }
    return 0;
}

int cmd_sample(const std::string& problem_path, const std::string& init_kind,
               const std::string& binary_path, const ConfigCli& cli) {
    const ExperimentConfig cfg = cli.resolve();
    if (cli.sigmas.size() != 1)
        throw ValidationError("sample: exactly one --sigma2 is required");
    const double sigma2 = cli.sigmas[0];
    const ProblemInstance inst = problem_from_json(read_json_file(problem_path));
    const ObservationSet& obs = pick_observations(inst, sigma2);
    ensure_dir(cfg.output_dir);

    SamplerConfig chain_cfg = cfg.sampler;
    if (chain_cfg.seed == 0) chain_cfg.seed = derive_seed(inst.seed, static_cast<std::uint64_t>(0x5a));

    std::optional<AbsoluteState> init;
    if (init_kind == "warm") {
        const auto warm = multi_restart(obs, Estimator::Mle2, cfg.optimizer.restarts,
                                        derive_seed(chain_cfg.seed, static_cast<std::uint64_t>(0xaa)),
                                        cfg.optimizer);
        init = warm.state;
    } else {
        Rng rng(derive_seed(chain_cfg.seed, static_cast<std::uint64_t>(0xbb)));
        std::vector<Rotation> maps;
        maps.push_back(Rotation::identity(inst.n));
        for (int i = 1; i < obs.graph.num_nodes(); ++i) maps.push_back(haar_sample(inst.n, rng));
        init = AbsoluteState(std::move(maps));
    }

    const SampleSet set = run_chain(obs, *init, chain_cfg);
    const std::string stem =
        "samples_s" + fixed_token(sigma2, 100, 3) + "_seed" + std::to_string(inst.seed);
    write_json_file((fs::path(cfg.output_dir) / (stem + ".json")).string(), sample_set_to_json(set));
    if (!binary_path.empty()) {
        std::ofstream bin(binary_path, std::ios::binary);
        if (!bin) throw std::runtime_error("cannot open for writing: " + binary_path);
        write_sample_stream(bin, set);
        if (!bin) throw std::runtime_error("write failed: " + binary_path);
    }
    std::cout << "wrote " << set.samples.size() << " samples\n";
    return 0;
}

void write_tables(const fs::path& dir, const std::vector<CellResult>& rows,
                  const std::vector<std::string>& estimators, const std::vector<double>& densities,
                  const std::vector<double>& sigmas, const json& echo) {
    const auto table = summarize_experiment(rows, estimators, densities, sigmas, false);
    const auto table_sq = summarize_experiment(rows, estimators, densities, sigmas, true);
    write_table_csv((dir / "table.csv").string(), table, false, echo);
    write_table_csv((dir / "table_stddev.csv").string(), table, true, echo);
    write_table_csv((dir / "table_sq.csv").string(), table_sq, false, echo);
    write_long_csv((dir / "sweep_long.csv").string(), table, echo);
    for (const auto& miss : table.missing) std::cerr << "missing cell: " << miss << "\n";
}

int cmd_sweep(const ConfigCli& cli) {
    const ExperimentConfig cfg = cli.resolve();
    ensure_dir(cfg.output_dir);
    const json echo = experiment_config_to_json(cfg);

    const SweepOutputs out = run_sweep(cfg);
    const fs::path dir(cfg.output_dir);
    write_results_csv((dir / "results.csv").string(), out.results, echo);
    write_convergence_csv((dir / "convergence.csv").string(), out.traces, echo);
    write_tables(dir, out.results, cfg.estimators, cfg.densities, cfg.sigmas2, echo);

    if (!out.failures.empty()) {
        write_json_file((dir / "failures.json").string(),
                        json{{"format_version", kFormatVersion}, {"failures", out.failures}});
        std::cerr << out.failures.size() << " cells failed; manifest written\n";
        return 2;
    }
    return 0;
}

int cmd_report(const std::string& results_path, const ConfigCli& cli) {
    const ExperimentConfig base = cli.resolve();
    const auto rows = read_results_csv(results_path);
    if (rows.empty()) throw ValidationError("report: no data rows in " + results_path);
    ensure_dir(base.output_dir);

    // layout from the data: estimators in canonical order, densities
    // descending, sigma columns ascending
    std::vector<std::string> estimators;
    for (const auto& name : kKnownEstimators)
        if (std::any_of(rows.begin(), rows.end(),
                        [&](const CellResult& r) { return r.estimator == name; }))
            estimators.push_back(name);
    std::vector<double> densities, sigmas;
    for (const auto& r : rows) {
        if (std::none_of(densities.begin(), densities.end(),
                         [&](double d) { return std::abs(d - r.density) < 1e-12; }))
            densities.push_back(r.density);
        if (std::none_of(sigmas.begin(), sigmas.end(),
                         [&](double s) { return std::abs(s - r.sigma2) < 1e-12; }))
            sigmas.push_back(r.sigma2);
    }
    std::sort(densities.rbegin(), densities.rend());
    std::sort(sigmas.begin(), sigmas.end());

    write_tables(base.output_dir, rows, estimators, densities, sigmas,
                 json{{"source", results_path}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic synchronization of functional maps on SO(n)"};
    app.require_subcommand(1);

    ConfigCli gen_cli, est_cli, smp_cli, swp_cli, rep_cli;
    std::string problem_path, init_kind = "warm", binary_path, results_path;

    auto* gen = app.add_subcommand("generate", "write problem instance files");
    gen_cli.attach(gen);

    auto* est = app.add_subcommand("estimate", "run one estimator on a problem file");
    est->add_option("--problem", problem_path, "problem JSON file")->required();
    est_cli.attach(est);  // --estimator names the one estimator to run;
                          // --sigma2 selects the noise levels (default: all in the file)

    auto* smp = app.add_subcommand("sample", "run the Langevin sampler on a problem file");
    smp->add_option("--problem", problem_path, "problem JSON file")->required();
    smp->add_option("--init", init_kind, "chain initialization: warm|haar")
        ->check(CLI::IsMember({"warm", "haar"}));
    smp->add_option("--binary", binary_path, "also write the binary sample stream here");
    smp_cli.attach(smp);

    auto* swp = app.add_subcommand("sweep", "run the full experiment grid");
    swp_cli.attach(swp);

    auto* rep = app.add_subcommand("report", "aggregate a results CSV into tables");
    rep->add_option("--results", results_path, "results.csv produced by sweep/estimate")->required();
    rep_cli.attach(rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_cli);
        if (est->parsed()) return cmd_estimate(problem_path, est_cli);
        if (smp->parsed()) return cmd_sample(problem_path, init_kind, binary_path, smp_cli);
        if (swp->parsed()) return cmd_sweep(swp_cli);
        if (rep->parsed()) return cmd_report(results_path, rep_cli);
    } catch (const ValidationError& ex) {
        std::cerr << "validation error: " << ex.what() << "\n";
        return 1;
    } catch (const DimensionError& ex) {
        std::cerr << "validation error: " << ex.what() << "\n";
        return 1;
    } catch (const json::exception& ex) {
        std::cerr << "input error: " << ex.what() << "\n";
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "i/o error: " << ex.what() << "\n";
        return 3;
    }
    return 0;
}
